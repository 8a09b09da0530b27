//! FWM response spectrum, linear transmission and the combined filter.
//!
//! The FWM response at a pair of detunings is extracted from steady states.
//! With ρ₃₁(Ω_c, Ω) the signal coherence for coupling Ω_c and a total 3↔4
//! drive Ω = Ω_p ± Ω_pr, the response is the mixed difference
//!
//! ```text
//! R = γ² · { [ρ₃₁(Ω_c, Ω_p+Ω_pr) − ρ₃₁(Ω_c, Ω_p−Ω_pr)]
//!          − [ρ₃₁(0,   Ω_p+Ω_pr) − ρ₃₁(0,   Ω_p−Ω_pr)] } / (2 Ω_pr Ω_s)
//! ```
//!
//! The central difference in Ω_pr isolates the part odd in the probe, which
//! vanishes without a pump because ρ₃₁ depends on the 3↔4 drive only through
//! its modulus. Subtracting the uncoupled solution removes the pathway that
//! does not involve the coupling leg. The γ² factor makes R dimensionless;
//! the physical prefactor of the susceptibility is set to one.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atom::{build_liouvillian, coherence, steady_state, AtomScheme, DensityMatrix, DriveFields, Liouvillian};
use crate::error::{Error, Result};
use crate::units::{mhz, to_mhz};

/// Relative change allowed when the probe step is halved.
pub const PERTURBATIVE_TOL: f64 = 0.05;
/// Absolute floor (in response units) below which the halving test is skipped.
const RESPONSE_FLOOR: f64 = 1e-9;

/// Uniform detuning grid in MHz, ascending.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl FrequencyGrid {
    pub fn new(start: f64, step: f64, len: usize) -> Result<Self> {
        if !start.is_finite() || !step.is_finite() {
            return Err(Error::NonFinite("frequency grid"));
        }
        if step <= 0.0 {
            return Err(Error::invalid("grid.step", "must be > 0"));
        }
        if len < 2 {
            return Err(Error::invalid("grid.len", "must be >= 2"));
        }
        Ok(Self { start, step, len })
    }

    /// `len` points spanning [−half_span, +half_span].
    pub fn symmetric(half_span: f64, len: usize) -> Result<Self> {
        if len < 2 {
            return Err(Error::invalid("grid.len", "must be >= 2"));
        }
        Self::new(-half_span, 2.0 * half_span / (len - 1) as f64, len)
    }

    #[inline]
    pub fn at(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.at(i)).collect()
    }

    pub fn compatible(&self, other: &FrequencyGrid) -> bool {
        self.len == other.len
            && ((self.step - other.step) / self.step).abs() < 1e-9
            && (self.start - other.start).abs() < 1e-9 * self.step.abs().max(1.0)
    }
}

/// Complex response sampled on a [`FrequencyGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralResponse {
    pub grid: FrequencyGrid,
    pub amplitude: Vec<C64>,
    /// Start time of the pulse a transform came from; zero otherwise.
    pub time_origin_us: f64,
}

impl SpectralResponse {
    pub fn new(grid: FrequencyGrid, amplitude: Vec<C64>) -> Result<Self> {
        if amplitude.len() != grid.len {
            return Err(Error::GridMismatch(format!(
                "{} amplitudes for {} grid points",
                amplitude.len(),
                grid.len
            )));
        }
        Ok(Self {
            grid,
            amplitude,
            time_origin_us: 0.0,
        })
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.amplitude.iter().map(|z| z.norm()).collect()
    }

    pub fn max_magnitude(&self) -> f64 {
        self.amplitude.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Rescale so the largest magnitude is one.
    pub fn normalized(&self) -> Result<Self> {
        let m = self.max_magnitude();
        if self.amplitude.is_empty() || !(m > 0.0) {
            return Err(Error::EmptySpectrum);
        }
        let mut out = self.clone();
        out.amplitude.iter_mut().for_each(|z| *z /= m);
        Ok(out)
    }
}

/// How the probe detuning follows the signal detuning during a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    /// Δ₁ = 0 held fixed.
    FixedProbe,
    /// Δ₁ = −Δ₂, keeping the two-photon resonance.
    TwoPhotonLocked,
}

impl SweepMode {
    pub fn probe_detuning(self, delta_2_mhz: f64) -> f64 {
        match self {
            SweepMode::FixedProbe => 0.0,
            SweepMode::TwoPhotonLocked => -delta_2_mhz,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dispersion {
    Off,
    Lorentzian,
}

/// Linear absorption of the generated signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterParams {
    /// Optical depth: amplitude transmission at line center is e^(−alpha).
    pub alpha: f64,
    /// Absorption half-linewidth, rad/μs.
    pub gamma: f64,
    /// Absorption line center relative to Δ₂ = 0, MHz.
    pub center_offset: f64,
    pub dispersion: Dispersion,
}

pub const DEFAULT_ALPHA: f64 = 4.0;
pub const DEFAULT_ABSORPTION_HALF_WIDTH_MHZ: f64 = 2.0;

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            gamma: mhz(DEFAULT_ABSORPTION_HALF_WIDTH_MHZ),
            center_offset: 0.0,
            dispersion: Dispersion::Off,
        }
    }
}

impl FilterParams {
    pub fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() || !self.gamma.is_finite() || !self.center_offset.is_finite() {
            return Err(Error::NonFinite("filter parameters"));
        }
        if self.alpha < 0.0 {
            return Err(Error::invalid("alpha", "must be >= 0"));
        }
        if self.gamma <= 0.0 {
            return Err(Error::invalid("gamma", "must be > 0"));
        }
        Ok(())
    }
}

/// Amplitude transmission of the absorbing line at signal detuning `delta_2_mhz`.
///
/// With x = (Δ₂ − center_offset)/γ (γ in MHz):
/// * `Off`: exp(−α / (1 + x²)), real.
/// * `Lorentzian`: exp(−α / (1 + i x)). Its magnitude equals the `Off` value
///   and its phase is +α x / (1 + x²). The pole sits at x = +i, which is the
///   causal side for the e^(+2πi f t) envelope convention of
///   [`crate::pulses::forward_transform`].
pub fn transmission_amplitude(delta_2_mhz: f64, params: &FilterParams) -> C64 {
    let x = (delta_2_mhz - params.center_offset) / to_mhz(params.gamma);
    match params.dispersion {
        Dispersion::Off => C64::from((-params.alpha / (1.0 + x * x)).exp()),
        Dispersion::Lorentzian => (-C64::from(params.alpha) / C64::new(1.0, x)).exp(),
    }
}

pub fn transmission_spectrum(params: &FilterParams, grid: FrequencyGrid) -> SpectralResponse {
    let amplitude = grid
        .points()
        .into_iter()
        .map(|d| transmission_amplitude(d, params))
        .collect();
    SpectralResponse {
        grid,
        amplitude,
        time_origin_us: 0.0,
    }
}

/// Absorption dip 1 − |t| on `grid`, for bandwidth comparisons.
pub fn absorption_dip(params: &FilterParams, grid: FrequencyGrid) -> SpectralResponse {
    let mut s = transmission_spectrum(params, grid);
    s.amplitude.iter_mut().for_each(|z| *z = C64::from(1.0 - z.norm()));
    s
}

type Solver<'a> = &'a (dyn Fn(&Liouvillian) -> Result<DensityMatrix> + Sync);

fn signal_coherence(scheme: &AtomScheme, drives: &DriveFields, solve: Solver) -> Result<C64> {
    let rho = solve(&build_liouvillian(scheme, drives)?)?;
    coherence(&rho, 3, 1)
}

fn fwm_response(scheme: &AtomScheme, drives: &DriveFields, probe_step: C64, solve: Solver) -> Result<C64> {
    if probe_step.norm() == 0.0 {
        return Err(Error::invalid("omega_pr", "must be nonzero"));
    }
    if drives.omega_s.norm() == 0.0 {
        return Err(Error::invalid("omega_s", "must be nonzero"));
    }
    let rho31 = |omega_c: C64, omega_pr: C64| {
        let mut d = *drives;
        d.omega_c = omega_c;
        d.omega_pr = omega_pr;
        signal_coherence(scheme, &d, solve)
    };
    let coupled = rho31(drives.omega_c, probe_step)? - rho31(drives.omega_c, -probe_step)?;
    let uncoupled = rho31(C64::new(0.0, 0.0), probe_step)? - rho31(C64::new(0.0, 0.0), -probe_step)?;
    let g2 = scheme.gamma * scheme.gamma;
    Ok((coupled - uncoupled) * g2 / (probe_step * drives.omega_s * 2.0))
}

/// FWM response at (Δ₁, Δ₂) in MHz, using `solve` for each steady state.
pub fn chi3_point_with(
    scheme: &AtomScheme,
    drives: &DriveFields,
    delta_1_mhz: f64,
    delta_2_mhz: f64,
    solve: Solver,
) -> Result<C64> {
    scheme.validate()?;
    drives.validate()?;
    drives.check_perturbative(scheme)?;
    let d = drives.with_detunings(mhz(delta_1_mhz), mhz(delta_2_mhz));
    let full = fwm_response(scheme, &d, d.omega_pr, solve)?;
    let half = fwm_response(scheme, &d, d.omega_pr / 2.0, solve)?;
    if (full - half).norm() > PERTURBATIVE_TOL * full.norm().max(RESPONSE_FLOOR) {
        return Err(Error::PerturbativeBreakdown {
            full: format!("{full}"),
            half: format!("{half}"),
        });
    }
    Ok(full)
}

pub fn chi3_point(scheme: &AtomScheme, drives: &DriveFields, delta_1_mhz: f64, delta_2_mhz: f64) -> Result<C64> {
    chi3_point_with(scheme, drives, delta_1_mhz, delta_2_mhz, &steady_state)
}

/// FWM response over `grid`. Bins are evaluated in parallel and returned in
/// grid order.
pub fn chi3_spectrum(
    scheme: &AtomScheme,
    drives: &DriveFields,
    mode: SweepMode,
    grid: FrequencyGrid,
) -> Result<SpectralResponse> {
    let amplitude = (0..grid.len)
        .into_par_iter()
        .map(|i| {
            let d2 = grid.at(i);
            chi3_point(scheme, drives, mode.probe_detuning(d2), d2).map_err(|e| Error::AtDetuning {
                delta_2_mhz: d2,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    SpectralResponse::new(grid, amplitude)
}

/// Per-bin product of the FWM response with the line transmission, without
/// renormalization.
pub fn apply_transmission(chi3: &SpectralResponse, params: &FilterParams) -> Result<SpectralResponse> {
    params.validate()?;
    let mut out = chi3.clone();
    for (i, z) in out.amplitude.iter_mut().enumerate() {
        *z *= transmission_amplitude(chi3.grid.at(i), params);
    }
    Ok(out)
}

/// FWM generation times absorption, rescaled to unit peak magnitude.
pub fn combined_filter(chi3: &SpectralResponse, params: &FilterParams) -> Result<SpectralResponse> {
    if chi3.amplitude.is_empty() {
        return Err(Error::EmptySpectrum);
    }
    apply_transmission(chi3, params)?.normalized()
}

/// Full width at half maximum of |amplitude|, MHz, with linear interpolation
/// between the bins that bracket each half-maximum crossing.
pub fn bandwidth_fwhm(spec: &SpectralResponse) -> Result<f64> {
    let mags = spec.magnitudes();
    let n = mags.len();
    if n < 3 {
        return Err(Error::NoHalfCrossing);
    }
    let (peak, max) =
        mags.iter().copied().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |acc, (i, m)| if m > acc.1 { (i, m) } else { acc },
        );
    if !(max > 0.0) || peak == 0 || peak == n - 1 {
        return Err(Error::NoHalfCrossing);
    }
    let half = max / 2.0;
    let crossing = |lo: usize, hi: usize| {
        // mags[lo] and mags[hi] bracket `half`
        let frac = (half - mags[lo]) / (mags[hi] - mags[lo]);
        spec.grid.at(lo) + frac * (spec.grid.at(hi) - spec.grid.at(lo))
    };

    let mut l = peak;
    while l > 0 && mags[l] >= half {
        l -= 1;
    }
    if mags[l] >= half {
        return Err(Error::NoHalfCrossing);
    }
    let mut r = peak;
    while r < n - 1 && mags[r] >= half {
        r += 1;
    }
    if mags[r] >= half {
        return Err(Error::NoHalfCrossing);
    }
    Ok(crossing(r, r - 1) - crossing(l, l + 1))
}

/// Result of the coupling-strength bisection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Calibration {
    pub omega_c_mhz: f64,
    pub fwhm_mhz: f64,
    pub target_mhz: f64,
    pub iterations: usize,
}

/// Target FWM bandwidth.
pub const TARGET_FWHM_MHZ: f64 = 10.0;
/// Coupling bracket searched by [`calibrate_coupling`], MHz.
pub const CALIBRATION_BRACKET_MHZ: (f64, f64) = (0.5, 16.0);

pub fn fixed_probe_fwhm(scheme: &AtomScheme, drives: &DriveFields, grid: FrequencyGrid) -> Result<f64> {
    bandwidth_fwhm(&chi3_spectrum(scheme, drives, SweepMode::FixedProbe, grid)?)
}

/// Bisects the (real) coupling Rabi frequency until the FixedProbe FWHM
/// matches `target_mhz` within `tol_mhz`. The FWHM grows monotonically with
/// Ω_c over the default bracket.
pub fn calibrate_coupling(
    scheme: &AtomScheme,
    drives: &DriveFields,
    grid: FrequencyGrid,
    target_mhz: f64,
    bracket_mhz: (f64, f64),
    tol_mhz: f64,
) -> Result<Calibration> {
    let width = |omega_c_mhz: f64| {
        let mut d = *drives;
        d.omega_c = C64::from(mhz(omega_c_mhz));
        fixed_probe_fwhm(scheme, &d, grid)
    };
    let (mut lo, mut hi) = bracket_mhz;
    let (f_lo, f_hi) = (width(lo)?, width(hi)?);
    if !(f_lo < target_mhz && target_mhz < f_hi) {
        return Err(Error::CalibrationBracket {
            target_mhz,
            lo_mhz: lo,
            hi_mhz: hi,
            f_lo,
            f_hi,
        });
    }
    let mut iterations = 0;
    loop {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        let f = width(mid)?;
        if (f - target_mhz).abs() <= tol_mhz || iterations >= 60 {
            return Ok(Calibration {
                omega_c_mhz: mid,
                fwhm_mhz: f,
                target_mhz,
                iterations,
            });
        }
        if f < target_mhz {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}
