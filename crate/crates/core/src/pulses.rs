//! Probe pulse shapes on uniform time grids, and the unitary transform pair
//! between time samples and the centered detuning axis.

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectra::{FrequencyGrid, SpectralResponse};

/// Uniform time grid, μs. `n` is a power of two and at least 8.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_start: f64,
    pub dt: f64,
    pub n: usize,
}

pub const DEFAULT_SAMPLES: usize = 4096;
pub const DEFAULT_DT_US: f64 = 0.01;

impl Default for TimeGrid {
    fn default() -> Self {
        Self {
            t_start: 0.0,
            dt: DEFAULT_DT_US,
            n: DEFAULT_SAMPLES,
        }
    }
}

impl TimeGrid {
    pub fn new(t_start: f64, dt: f64, n: usize) -> Result<Self> {
        let g = Self { t_start, dt, n };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.t_start.is_finite() || !self.dt.is_finite() {
            return Err(Error::NonFinite("time grid"));
        }
        if self.dt <= 0.0 {
            return Err(Error::invalid("dt", "must be > 0"));
        }
        if self.n < 8 || !self.n.is_power_of_two() {
            return Err(Error::invalid("n", "must be a power of two >= 8"));
        }
        Ok(())
    }

    #[inline]
    pub fn t(&self, i: usize) -> f64 {
        self.t_start + i as f64 * self.dt
    }

    /// Time of the last sample.
    pub fn end(&self) -> f64 {
        self.t(self.n - 1)
    }

    pub fn span(&self) -> f64 {
        self.n as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.t(i)).collect()
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t_start && t <= self.end()
    }

    /// Index range of samples with `from <= t < to`, with a small tolerance
    /// so that grid-aligned boundaries are not lost to rounding.
    pub fn index_range(&self, from: f64, to: f64) -> std::ops::Range<usize> {
        let eps = 1e-9;
        let lo = ((from - self.t_start) / self.dt - eps).ceil().max(0.0) as usize;
        let hi = ((to - self.t_start) / self.dt - eps).ceil().max(0.0) as usize;
        lo.min(self.n)..hi.min(self.n)
    }

    /// Detuning grid produced by [`forward_transform`].
    pub fn frequency_grid(&self) -> FrequencyGrid {
        let step = 1.0 / (self.n as f64 * self.dt);
        FrequencyGrid {
            start: -(self.n as f64 / 2.0) * step,
            step,
            len: self.n,
        }
    }

    fn check_edge(&self, t: f64) -> Result<()> {
        if !t.is_finite() || !self.contains(t) {
            return Err(Error::EdgeOutsideGrid {
                t_us: t,
                start: self.t_start,
                end: self.end(),
            });
        }
        Ok(())
    }
}

/// Complex envelope sampled on a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct PulseEnvelope {
    pub grid: TimeGrid,
    pub amplitude: Vec<C64>,
}

impl PulseEnvelope {
    pub fn new(grid: TimeGrid, amplitude: Vec<C64>) -> Result<Self> {
        grid.validate()?;
        if amplitude.len() != grid.n {
            return Err(Error::GridMismatch(format!(
                "{} samples for a grid of {}",
                amplitude.len(),
                grid.n
            )));
        }
        Ok(Self { grid, amplitude })
    }

    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> f64) -> Self {
        let amplitude = grid.times().into_iter().map(|t| C64::from(f(t))).collect();
        Self { grid, amplitude }
    }

    pub fn zeros(grid: TimeGrid) -> Self {
        Self {
            grid,
            amplitude: vec![C64::new(0.0, 0.0); grid.n],
        }
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.amplitude.iter().map(|z| z.norm()).collect()
    }

    pub fn max_magnitude(&self) -> f64 {
        self.amplitude.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Σ |a|² dt over the whole grid.
    pub fn energy(&self) -> f64 {
        self.amplitude.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.dt
    }

    /// Rescaled to unit peak magnitude; an all-zero envelope is returned as is.
    pub fn normalized(&self) -> Self {
        self.scaled(self.max_magnitude())
    }

    pub(crate) fn scaled(&self, by: f64) -> Self {
        let mut out = self.clone();
        if by > 0.0 {
            out.amplitude.iter_mut().for_each(|z| *z /= by);
        }
        out
    }
}

/// Flat-top pulse on [t_a, t_b] with Gaussian edges exp(−k(t − t_edge)²).
pub fn square_pulse(t_a: f64, t_b: f64, k: f64, grid: TimeGrid) -> Result<PulseEnvelope> {
    grid.validate()?;
    grid.check_edge(t_a)?;
    grid.check_edge(t_b)?;
    if !(t_a < t_b) {
        return Err(Error::invalid("t_a", "must be < t_b"));
    }
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::invalid("k", "must be finite and > 0"));
    }
    Ok(PulseEnvelope::from_fn(grid, |t| {
        if t < t_a {
            (-k * (t - t_a).powi(2)).exp()
        } else if t > t_b {
            (-k * (t - t_b).powi(2)).exp()
        } else {
            1.0
        }
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Abrupt rise at the cut, Gaussian decay after it.
    SharpRise,
    /// Gaussian rise up to the cut, abrupt fall at it.
    SharpFall,
}

/// Half-Gaussian pulse with its abrupt edge at `t_cut` and Gaussian standard
/// deviation `delta_t`.
pub fn half_gaussian_pulse(
    t_cut: f64,
    delta_t: f64,
    orientation: Orientation,
    grid: TimeGrid,
) -> Result<PulseEnvelope> {
    grid.validate()?;
    grid.check_edge(t_cut)?;
    if !(delta_t > 0.0) || !delta_t.is_finite() {
        return Err(Error::invalid("delta_t", "must be finite and > 0"));
    }
    let two_var = 2.0 * delta_t * delta_t;
    Ok(PulseEnvelope::from_fn(grid, |t| {
        let on = match orientation {
            Orientation::SharpRise => t >= t_cut,
            Orientation::SharpFall => t <= t_cut,
        };
        if on {
            (-(t - t_cut).powi(2) / two_var).exp()
        } else {
            0.0
        }
    }))
}

fn fft_in_place(buf: &mut [C64], inverse: bool) {
    let mut planner = FftPlanner::new();
    let plan = if inverse {
        planner.plan_fft_inverse(buf.len())
    } else {
        planner.plan_fft_forward(buf.len())
    };
    plan.process(buf);
    let scale = 1.0 / (buf.len() as f64).sqrt();
    buf.iter_mut().for_each(|z| *z *= scale);
}

/// Unitary DFT onto the centered detuning axis.
///
/// Bin m holds X(f_m) = n^(−1/2) Σ_j x_j e^(−2πi f_m j dt) with
/// f_m = (m − n/2)/(n dt), so bins run from −1/(2dt) upward in steps of
/// 1/(n dt). An envelope component e^(+2πi f t) lands in bin f, which is read
/// as signal detuning Δ₂ = f. Phases are referenced to the first sample.
pub fn forward_transform(pulse: &PulseEnvelope) -> SpectralResponse {
    let n = pulse.grid.n;
    let mut buf = pulse.amplitude.clone();
    fft_in_place(&mut buf, false);
    buf.rotate_left(n / 2);
    SpectralResponse {
        grid: pulse.grid.frequency_grid(),
        amplitude: buf,
        time_origin_us: pulse.grid.t_start,
    }
}

/// Exact inverse of [`forward_transform`].
pub fn inverse_transform(spec: &SpectralResponse) -> Result<PulseEnvelope> {
    let n = spec.grid.len;
    if n < 8 || !n.is_power_of_two() {
        return Err(Error::GridMismatch(format!("{n} bins is not a power of two >= 8")));
    }
    if spec.amplitude.len() != n {
        return Err(Error::GridMismatch("amplitude length differs from grid".into()));
    }
    let dt = 1.0 / (n as f64 * spec.grid.step);
    let grid = TimeGrid::new(spec.time_origin_us, dt, n)?;
    if !grid.frequency_grid().compatible(&spec.grid) {
        return Err(Error::GridMismatch(format!(
            "grid starting at {} MHz is not centered for {n} bins",
            spec.grid.start
        )));
    }
    let mut buf = spec.amplitude.clone();
    buf.rotate_right(n / 2);
    fft_in_place(&mut buf, true);
    Ok(PulseEnvelope { grid, amplitude: buf })
}

/// Fraction of spectral energy at |f| > `cutoff_mhz`.
pub fn spectral_fraction_above(pulse: &PulseEnvelope, cutoff_mhz: f64) -> f64 {
    let spec = forward_transform(pulse);
    let (mut above, mut total) = (0.0, 0.0);
    for (i, z) in spec.amplitude.iter().enumerate() {
        let e = z.norm_sqr();
        total += e;
        if spec.grid.at(i).abs() > cutoff_mhz {
            above += e;
        }
    }
    if total > 0.0 {
        above / total
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::bandwidth_fwhm;
    use proptest::prelude::*;

    fn grid(n: usize) -> TimeGrid {
        TimeGrid::new(0.0, 0.01, n).unwrap()
    }

    fn energy(v: &[C64]) -> f64 {
        v.iter().map(|z| z.norm_sqr()).sum()
    }

    #[test]
    fn grid_invariants() {
        assert!(TimeGrid::new(0.0, 0.01, 1000).is_err());
        assert!(TimeGrid::new(0.0, 0.01, 4).is_err());
        assert!(TimeGrid::new(0.0, 0.0, 16).is_err());
        let g = TimeGrid::default();
        assert!((g.span() - 40.96).abs() < 1e-12);
        let f = g.frequency_grid();
        assert!((f.start + 50.0).abs() < 1e-9);
        assert!((f.step - 1.0 / 40.96).abs() < 1e-12);
    }

    #[test]
    fn square_pulse_values() {
        let g = TimeGrid::default();
        let p = square_pulse(10.0, 20.0, 1.0, g).unwrap();
        let at = |t: f64| p.amplitude[((t - g.t_start) / g.dt).round() as usize].re;
        assert_eq!(at(15.0), 1.0);
        assert!((at(21.0) - (-1.0f64).exp()).abs() < 1e-12);
        assert!((at(9.0) - (-1.0f64).exp()).abs() < 1e-12);
        assert!(p.amplitude.iter().all(|z| z.im == 0.0 && z.re >= 0.0 && z.re <= 1.0));
    }

    #[test]
    fn steep_square_pulse_is_a_rectangle() {
        let g = TimeGrid::default();
        let (t_a, t_b) = (10.005, 20.005);
        let p = square_pulse(t_a, t_b, 1e6, g).unwrap();
        let edges = [t_a, t_b];
        for (i, z) in p.amplitude.iter().enumerate() {
            let t = g.t(i);
            let ideal = if (t_a..=t_b).contains(&t) { 1.0 } else { 0.0 };
            let near_edge = edges.iter().any(|e| (t - e).abs() <= 2.0 * g.dt);
            if !near_edge {
                assert!((z.re - ideal).abs() < 1e-12, "t = {t}");
            }
        }
    }

    #[test]
    fn square_pulse_errors() {
        let g = TimeGrid::default();
        assert!(matches!(
            square_pulse(-1.0, 5.0, 1.0, g),
            Err(Error::EdgeOutsideGrid { .. })
        ));
        assert!(matches!(
            square_pulse(1.0, 50.0, 1.0, g),
            Err(Error::EdgeOutsideGrid { .. })
        ));
        assert!(square_pulse(5.0, 1.0, 1.0, g).is_err());
        assert!(square_pulse(1.0, 5.0, 0.0, g).is_err());
    }

    #[test]
    fn half_gaussian_values() {
        let g = TimeGrid::default();
        let p = half_gaussian_pulse(10.0, 2.0, Orientation::SharpRise, g).unwrap();
        let idx = |t: f64| ((t - g.t_start) / g.dt).round() as usize;
        assert_eq!(p.amplitude[idx(10.0)].re, 1.0);
        assert_eq!(p.amplitude[idx(10.0) - 1].re, 0.0);
        assert!((p.amplitude[idx(12.0)].re - (-0.5f64).exp()).abs() < 1e-12);

        let q = half_gaussian_pulse(10.0, 2.0, Orientation::SharpFall, g).unwrap();
        assert_eq!(q.amplitude[idx(10.0)].re, 1.0);
        assert_eq!(q.amplitude[idx(10.0) + 1].re, 0.0);
        assert!((q.amplitude[idx(8.0)].re - (-0.5f64).exp()).abs() < 1e-12);
        assert!(matches!(
            half_gaussian_pulse(45.0, 1.0, Orientation::SharpRise, g),
            Err(Error::EdgeOutsideGrid { .. })
        ));
        assert!(half_gaussian_pulse(10.0, 0.0, Orientation::SharpRise, g).is_err());
    }

    #[test]
    fn delta_has_flat_spectrum() {
        let g = grid(256);
        let mut p = PulseEnvelope::zeros(g);
        p.amplitude[37] = C64::new(1.0, 0.0);
        let s = forward_transform(&p);
        for z in &s.amplitude {
            assert!((z.norm() - 1.0 / 16.0).abs() < 1e-14);
        }
    }

    #[test]
    fn flat_spectrum_is_a_delta() {
        let g = grid(256);
        let spec = SpectralResponse {
            grid: g.frequency_grid(),
            amplitude: vec![C64::new(1.0 / 16.0, 0.0); 256],
            time_origin_us: 0.0,
        };
        let p = inverse_transform(&spec).unwrap();
        assert!((p.amplitude[0] - C64::new(1.0, 0.0)).norm() < 1e-14);
        assert!(p.amplitude[1..].iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn gaussian_transform_width() {
        let g = TimeGrid::default();
        let sigma_t = 0.2;
        let p = PulseEnvelope::from_fn(g, |t| (-(t - 20.48).powi(2) / (2.0 * sigma_t * sigma_t)).exp());
        let s = forward_transform(&p);
        let sigma_f = 1.0 / (2.0 * std::f64::consts::PI * sigma_t);
        let want = 2.0 * (2.0 * 2f64.ln()).sqrt() * sigma_f;
        let got = bandwidth_fwhm(&s).unwrap();
        assert!((got - want).abs() < 0.01 * want, "{got} vs {want}");
    }

    #[test]
    fn tone_lands_in_matching_bin() {
        let g = TimeGrid::default();
        let f0 = 40.0 * g.frequency_grid().step;
        let p = PulseEnvelope {
            grid: g,
            amplitude: g
                .times()
                .into_iter()
                .map(|t| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * f0 * t))
                .collect(),
        };
        let s = forward_transform(&p);
        let peak = s
            .amplitude
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap()
            .0;
        assert!((s.grid.at(peak) - f0).abs() < 1e-9);
    }

    #[test]
    fn parseval_at_4096() {
        let g = TimeGrid::default();
        let p = square_pulse(10.0, 20.0, 30.0, g).unwrap();
        let s = forward_transform(&p);
        let (a, b) = (energy(&p.amplitude), energy(&s.amplitude));
        assert!((a - b).abs() < 1e-10 * a);
    }

    #[test]
    fn inverse_rejects_foreign_grids() {
        let spec = SpectralResponse {
            grid: FrequencyGrid::new(-10.0, 0.1, 100).unwrap(),
            amplitude: vec![C64::new(0.0, 0.0); 100],
            time_origin_us: 0.0,
        };
        assert!(matches!(inverse_transform(&spec), Err(Error::GridMismatch(_))));
        let spec = SpectralResponse {
            grid: FrequencyGrid::new(-10.0, 0.1, 128).unwrap(),
            amplitude: vec![C64::new(0.0, 0.0); 128],
            time_origin_us: 0.0,
        };
        assert!(matches!(inverse_transform(&spec), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn steep_edges_carry_more_high_frequency_energy() {
        let g = TimeGrid::default();
        let fractions: Vec<f64> = (1..=6)
            .map(|dt| {
                let p = half_gaussian_pulse(5.0, dt as f64, Orientation::SharpRise, g).unwrap();
                spectral_fraction_above(&p, 1.0)
            })
            .collect();
        for w in fractions.windows(2) {
            assert!(w[1] < w[0], "{fractions:?}");
        }
    }

    fn complex_vec(n: usize) -> impl Strategy<Value = Vec<C64>> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n)
            .prop_map(|v| v.into_iter().map(|(a, b)| C64::new(a, b)).collect())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn roundtrip_and_parseval(x in complex_vec(1024), t0 in -5.0f64..5.0) {
            let p = PulseEnvelope::new(TimeGrid::new(t0, 0.01, 1024).unwrap(), x).unwrap();
            let s = forward_transform(&p);
            let back = inverse_transform(&s).unwrap();
            prop_assert_eq!(back.grid.n, p.grid.n);
            prop_assert!((back.grid.t_start - t0).abs() < 1e-12);
            let scale = p.max_magnitude();
            for (a, b) in back.amplitude.iter().zip(&p.amplitude) {
                prop_assert!((a - b).norm() < 1e-10 * scale);
            }
            let (ea, eb) = (energy(&p.amplitude), energy(&s.amplitude));
            prop_assert!((ea - eb).abs() < 1e-10 * ea);
        }

        #[test]
        fn inverse_is_linear(x in complex_vec(256), y in complex_vec(256), a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let fg = grid(256).frequency_grid();
            let sx = SpectralResponse { grid: fg, amplitude: x.clone(), time_origin_us: 0.0 };
            let sy = SpectralResponse { grid: fg, amplitude: y.clone(), time_origin_us: 0.0 };
            let combo = SpectralResponse {
                grid: fg,
                amplitude: x.iter().zip(&y).map(|(p, q)| p * a + q * b).collect(),
                time_origin_us: 0.0,
            };
            let lhs = inverse_transform(&combo).unwrap();
            let (ix, iy) = (inverse_transform(&sx).unwrap(), inverse_transform(&sy).unwrap());
            for i in 0..256 {
                let rhs = ix.amplitude[i] * a + iy.amplitude[i] * b;
                prop_assert!((lhs.amplitude[i] - rhs).norm() < 1e-10);
            }
        }
    }
}
