//! Transform, filter, inverse-transform chain for probe pulses, side-peak
//! detection on the generated signal, and the parameter sweeps built on them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atom::{AtomScheme, DriveFields};
use crate::error::{Error, Result};
use crate::pulses::{
    forward_transform, half_gaussian_pulse, inverse_transform, square_pulse, Orientation, PulseEnvelope, TimeGrid,
};
use crate::spectra::{chi3_spectrum, combined_filter, FilterParams, SpectralResponse, SweepMode};

pub const DEFAULT_PEAK_WINDOW_US: f64 = 0.5;
/// Reported in place of an infinite contrast.
pub const CONTRAST_CAP: f64 = 1e12;
/// Largest energy fraction tolerated in the outer n/32 samples at either end.
pub const BOUNDARY_LIMIT: f64 = 1e-6;

/// Filters `probe` through `filter` without renormalizing. This is the
/// circular convolution of the probe with the filter's impulse response.
pub fn filter_pulse(probe: &PulseEnvelope, filter: &SpectralResponse) -> Result<PulseEnvelope> {
    let mut spec = forward_transform(probe);
    if !spec.grid.compatible(&filter.grid) || filter.amplitude.len() != spec.amplitude.len() {
        return Err(Error::GridMismatch(format!(
            "filter grid (start {}, step {}, {} bins) does not match the probe transform \
             (start {}, step {}, {} bins)",
            filter.grid.start, filter.grid.step, filter.grid.len, spec.grid.start, spec.grid.step, spec.grid.len
        )));
    }
    for (z, h) in spec.amplitude.iter_mut().zip(&filter.amplitude) {
        *z *= h;
    }
    inverse_transform(&spec)
}

/// [`filter_pulse`] followed by rescaling to unit peak magnitude.
pub fn generate_signal(probe: &PulseEnvelope, filter: &SpectralResponse) -> Result<PulseEnvelope> {
    Ok(filter_pulse(probe, filter)?.normalized())
}

/// Energy fraction held in the outer n/32 samples at each end of the grid.
pub fn boundary_fraction(pulse: &PulseEnvelope) -> f64 {
    let n = pulse.amplitude.len();
    let edge = n / 32;
    let total: f64 = pulse.amplitude.iter().map(|z| z.norm_sqr()).sum();
    if total == 0.0 {
        return 0.0;
    }
    let outer: f64 = pulse.amplitude[..edge]
        .iter()
        .chain(&pulse.amplitude[n - edge..])
        .map(|z| z.norm_sqr())
        .sum();
    outer / total
}

pub fn check_boundary(pulse: &PulseEnvelope) -> Result<()> {
    let fraction = boundary_fraction(pulse);
    if fraction > BOUNDARY_LIMIT {
        return Err(Error::BoundaryLeak {
            fraction,
            limit: BOUNDARY_LIMIT,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeLabel {
    Rising,
    Falling,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SidePeak {
    pub time: f64,
    pub height: f64,
    pub edge: EdgeLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SidePeakReport {
    pub peaks: Vec<SidePeak>,
    pub plateau_level: f64,
    pub contrast: f64,
}

impl SidePeakReport {
    pub fn height(&self, edge: EdgeLabel) -> f64 {
        self.peaks
            .iter()
            .filter(|p| p.edge == edge)
            .map(|p| p.height)
            .fold(0.0, f64::max)
    }
}

/// Central half of the interval [t_a, t_b].
pub fn central_half(t_a: f64, t_b: f64) -> (f64, f64) {
    let q = 0.25 * (t_b - t_a);
    (t_a + q, t_b - q)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Locates the largest |output| within ±`window` of each edge and compares
/// it with the median level over `plateau`. Heights are relative to the
/// peak magnitude of the whole trace.
pub fn detect_side_peaks(
    output: &PulseEnvelope,
    edges: &[(f64, EdgeLabel)],
    window: f64,
    plateau: (f64, f64),
) -> Result<SidePeakReport> {
    let grid = output.grid;
    if !(window > 0.0) {
        return Err(Error::invalid("window", "must be > 0"));
    }
    let check = |from: f64, to: f64| {
        if !(from.is_finite() && to.is_finite()) || from < grid.t_start || to > grid.end() {
            Err(Error::WindowOutsideGrid { from, to })
        } else {
            Ok(())
        }
    };
    let scale = output.max_magnitude();
    let mag = |i: usize| {
        if scale > 0.0 {
            output.amplitude[i].norm() / scale
        } else {
            0.0
        }
    };

    check(plateau.0, plateau.1)?;
    let plateau_idx = grid.index_range(plateau.0, plateau.1 + 0.5 * grid.dt);
    if plateau_idx.is_empty() {
        return Err(Error::invalid("plateau_region", "contains no samples"));
    }
    let plateau_level = median(plateau_idx.map(mag).collect());

    let mut peaks = Vec::with_capacity(edges.len());
    for &(t_edge, edge) in edges {
        let (from, to) = (t_edge - window, t_edge + window);
        check(from, to)?;
        let (i, height) = grid
            .index_range(from, to + 0.5 * grid.dt)
            .map(|i| (i, mag(i)))
            .fold((usize::MAX, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if i == usize::MAX {
            return Err(Error::WindowOutsideGrid { from, to });
        }
        peaks.push(SidePeak {
            time: grid.t(i),
            height,
            edge,
        });
    }

    let top = peaks.iter().map(|p| p.height).fold(0.0, f64::max);
    let contrast = if plateau_level > 0.0 {
        (top / plateau_level).min(CONTRAST_CAP)
    } else if top > 0.0 {
        CONTRAST_CAP
    } else {
        0.0
    };
    Ok(SidePeakReport {
        peaks,
        plateau_level,
        contrast,
    })
}

/// One measured point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: f64,
    pub peak_rising: f64,
    pub peak_falling: f64,
    pub contrast: f64,
    pub energy_fraction: f64,
}

/// Rows in ascending parameter order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub param_name: String,
    pub rows: Vec<SweepRow>,
}

/// Square-pulse geometry, μs and μs⁻².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SquareShape {
    pub t_a: f64,
    pub t_b: f64,
    pub k: f64,
}

impl Default for SquareShape {
    fn default() -> Self {
        Self {
            t_a: 15.0,
            t_b: 25.0,
            k: 100.0,
        }
    }
}

/// Half-Gaussian geometry; the Gaussian width is the swept quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfGaussianShape {
    pub t_cut: f64,
    pub orientation: Orientation,
}

impl Default for HalfGaussianShape {
    fn default() -> Self {
        Self {
            t_cut: 5.0,
            orientation: Orientation::SharpRise,
        }
    }
}

/// FWM response sampled on the transform grid of `grid`, plus the absorption
/// settings that complete the filter.
#[derive(Debug, Clone)]
pub struct Pipeline {
    grid: TimeGrid,
    chi3: SpectralResponse,
    filter_params: FilterParams,
    filter: SpectralResponse,
    pub window: f64,
}

impl Pipeline {
    pub fn new(
        scheme: &AtomScheme,
        drives: &DriveFields,
        mode: SweepMode,
        filter_params: FilterParams,
        grid: TimeGrid,
    ) -> Result<Self> {
        grid.validate()?;
        let chi3 = chi3_spectrum(scheme, drives, mode, grid.frequency_grid())?;
        Self::from_chi3(chi3, filter_params, grid)
    }

    pub fn from_chi3(chi3: SpectralResponse, filter_params: FilterParams, grid: TimeGrid) -> Result<Self> {
        grid.validate()?;
        if !grid.frequency_grid().compatible(&chi3.grid) {
            return Err(Error::GridMismatch(
                "response is not sampled on the transform grid".into(),
            ));
        }
        let filter = combined_filter(&chi3, &filter_params)?;
        Ok(Self {
            grid,
            chi3,
            filter_params,
            filter,
            window: DEFAULT_PEAK_WINDOW_US,
        })
    }

    pub fn with_filter(&self, filter_params: FilterParams) -> Result<Self> {
        let mut out = Self::from_chi3(self.chi3.clone(), filter_params, self.grid)?;
        out.window = self.window;
        Ok(out)
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn chi3(&self) -> &SpectralResponse {
        &self.chi3
    }

    pub fn filter(&self) -> &SpectralResponse {
        &self.filter
    }

    pub fn filter_params(&self) -> &FilterParams {
        &self.filter_params
    }

    /// Unnormalized output, with the wrap-around guard applied to probe and
    /// output.
    pub fn transmit(&self, probe: &PulseEnvelope) -> Result<PulseEnvelope> {
        if probe.grid != self.grid {
            return Err(Error::GridMismatch("probe grid differs from the pipeline grid".into()));
        }
        check_boundary(probe)?;
        let out = filter_pulse(probe, &self.filter)?;
        check_boundary(&out)?;
        Ok(out)
    }

    pub fn run(&self, probe: &PulseEnvelope) -> Result<PulseEnvelope> {
        Ok(self.transmit(probe)?.normalized())
    }

    fn row(&self, param: f64, probe: &PulseEnvelope, edges: [f64; 2], plateau: (f64, f64)) -> Result<SweepRow> {
        let raw = self.transmit(probe)?;
        let energy_fraction = raw.energy() / probe.energy();
        let report = detect_side_peaks(
            &raw.normalized(),
            &[(edges[0], EdgeLabel::Rising), (edges[1], EdgeLabel::Falling)],
            self.window,
            plateau,
        )?;
        Ok(SweepRow {
            param,
            peak_rising: report.height(EdgeLabel::Rising),
            peak_falling: report.height(EdgeLabel::Falling),
            contrast: report.contrast,
            energy_fraction,
        })
    }

    /// Side peaks of a square pulse.
    pub fn measure_square(&self, param: f64, shape: SquareShape) -> Result<SweepRow> {
        let probe = square_pulse(shape.t_a, shape.t_b, shape.k, self.grid)?;
        self.row(
            param,
            &probe,
            [shape.t_a, shape.t_b],
            central_half(shape.t_a, shape.t_b),
        )
    }

    /// Side peaks of a half-Gaussian pulse. The Gaussian edge is located at
    /// its steepest point, one width away from the cut, and the plateau is
    /// the central half of the span between the two.
    pub fn measure_half_gaussian(&self, delta_t: f64, shape: HalfGaussianShape) -> Result<SweepRow> {
        let probe = half_gaussian_pulse(shape.t_cut, delta_t, shape.orientation, self.grid)?;
        let (edges, body) = match shape.orientation {
            Orientation::SharpRise => (
                [shape.t_cut, shape.t_cut + delta_t],
                (shape.t_cut, shape.t_cut + delta_t),
            ),
            Orientation::SharpFall => (
                [shape.t_cut - delta_t, shape.t_cut],
                (shape.t_cut - delta_t, shape.t_cut),
            ),
        };
        self.row(delta_t, &probe, edges, central_half(body.0, body.1))
    }

    pub fn sweep_pulse_width(&self, delta_t_values: &[f64], shape: HalfGaussianShape) -> Result<SweepResult> {
        if delta_t_values.iter().any(|&d| !(d > 0.0) || !d.is_finite()) {
            return Err(Error::invalid("delta_t_values", "must be finite and > 0"));
        }
        sweep("delta_t_us", delta_t_values, |d| self.measure_half_gaussian(d, shape))
    }

    pub fn sweep_detuning(&self, offsets: &[f64], shape: SquareShape) -> Result<SweepResult> {
        if offsets.iter().any(|o| !o.is_finite()) {
            return Err(Error::invalid("offsets", "must be finite"));
        }
        sweep("center_offset_mhz", offsets, |offset| {
            let params = FilterParams {
                center_offset: offset,
                ..self.filter_params
            };
            self.with_filter(params)?.measure_square(offset, shape)
        })
    }

    pub fn sweep_edge_steepness(&self, k_values: &[f64], shape: SquareShape) -> Result<SweepResult> {
        if k_values.iter().any(|&k| !(k > 0.0) || !k.is_finite()) {
            return Err(Error::invalid("k_values", "must be finite and > 0"));
        }
        sweep("k_per_us2", k_values, |k| {
            self.measure_square(k, SquareShape { k, ..shape })
        })
    }
}

/// Runs rows in parallel and reports them in ascending parameter order. The
/// first failing row (in that order) aborts the sweep, carrying the rows
/// that precede it.
fn sweep(name: &str, values: &[f64], row: impl Fn(f64) -> Result<SweepRow> + Sync) -> Result<SweepResult> {
    if values.is_empty() {
        return Err(Error::invalid("sweep values", "must be nonempty"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let results: Vec<Result<SweepRow>> = sorted.par_iter().map(|&v| row(v)).collect();
    let mut rows = Vec::with_capacity(results.len());
    for (param, r) in sorted.into_iter().zip(results) {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => {
                return Err(Error::SweepRow {
                    param,
                    completed: rows,
                    source: Box::new(e),
                })
            }
        }
    }
    Ok(SweepResult {
        param_name: name.to_string(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::Dispersion;
    use num_complex::Complex64 as C64;
    use rand::{Rng, SeedableRng};

    fn lorentz_chi3(grid: TimeGrid) -> SpectralResponse {
        let fg = grid.frequency_grid();
        SpectralResponse {
            grid: fg,
            amplitude: (0..fg.len).map(|i| C64::new(1.0, fg.at(i) / 5.0).inv()).collect(),
            time_origin_us: grid.t_start,
        }
    }

    fn toy_pipeline() -> Pipeline {
        let grid = TimeGrid::default();
        Pipeline::from_chi3(lorentz_chi3(grid), FilterParams::default(), grid).unwrap()
    }

    fn random_pulse(grid: TimeGrid, seed: u64) -> PulseEnvelope {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        PulseEnvelope {
            grid,
            amplitude: (0..grid.n)
                .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect(),
        }
    }

    fn random_filter(grid: TimeGrid, seed: u64) -> SpectralResponse {
        let p = random_pulse(grid, seed);
        SpectralResponse {
            grid: grid.frequency_grid(),
            amplitude: p.amplitude,
            time_origin_us: grid.t_start,
        }
    }

    #[test]
    fn identity_filter() {
        let grid = TimeGrid::default();
        let probe = square_pulse(15.0, 25.0, 3.0, grid).unwrap();
        let ones = SpectralResponse {
            grid: grid.frequency_grid(),
            amplitude: vec![C64::new(1.0, 0.0); grid.n],
            time_origin_us: 0.0,
        };
        let out = generate_signal(&probe, &ones).unwrap();
        let want = probe.normalized();
        for (a, b) in out.amplitude.iter().zip(&want.amplitude) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn zero_filter() {
        let grid = TimeGrid::default();
        let probe = square_pulse(15.0, 25.0, 3.0, grid).unwrap();
        let zeros = SpectralResponse {
            grid: grid.frequency_grid(),
            amplitude: vec![C64::new(0.0, 0.0); grid.n],
            time_origin_us: 0.0,
        };
        let out = generate_signal(&probe, &zeros).unwrap();
        assert!(out.amplitude.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn matches_direct_circular_convolution() {
        let grid = TimeGrid::new(-1.0, 0.05, 256).unwrap();
        let x = random_pulse(grid, 1);
        let filter = random_filter(grid, 2);
        let h = inverse_transform(&filter).unwrap().amplitude;
        let n = grid.n;
        let y: Vec<C64> = (0..n)
            .map(|m| (0..n).map(|l| h[l] * x.amplitude[(m + n - l) % n]).sum::<C64>() / (n as f64).sqrt())
            .collect();
        let out = filter_pulse(&x, &filter).unwrap();
        for (a, b) in out.amplitude.iter().zip(&y) {
            assert!((a - b).norm() < 1e-8);
        }
        let peak = y.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let norm = generate_signal(&x, &filter).unwrap();
        for (a, b) in norm.amplitude.iter().zip(&y) {
            assert!((a - b / peak).norm() < 1e-8);
        }
    }

    #[test]
    fn linear_in_probe() {
        let grid = TimeGrid::new(0.0, 0.01, 512).unwrap();
        let filter = random_filter(grid, 7);
        let (p1, p2) = (random_pulse(grid, 8), random_pulse(grid, 9));
        let (a, b) = (0.7, -1.3);
        let mix = PulseEnvelope {
            grid,
            amplitude: p1
                .amplitude
                .iter()
                .zip(&p2.amplitude)
                .map(|(x, y)| x * a + y * b)
                .collect(),
        };
        let lhs = filter_pulse(&mix, &filter).unwrap();
        let (o1, o2) = (filter_pulse(&p1, &filter).unwrap(), filter_pulse(&p2, &filter).unwrap());
        for i in 0..grid.n {
            assert!((lhs.amplitude[i] - (o1.amplitude[i] * a + o2.amplitude[i] * b)).norm() < 1e-10);
        }
    }

    #[test]
    fn output_energy_bounded_by_filter_peak() {
        let grid = TimeGrid::new(0.0, 0.01, 1024).unwrap();
        for seed in 0..10 {
            let p = random_pulse(grid, 100 + seed);
            let f = random_filter(grid, 200 + seed);
            let hmax = f.max_magnitude();
            let out = filter_pulse(&p, &f).unwrap();
            assert!(out.energy() <= hmax * hmax * p.energy() + 1e-10);
        }
    }

    #[test]
    fn rejects_mismatched_filter() {
        let grid = TimeGrid::default();
        let probe = square_pulse(15.0, 25.0, 3.0, grid).unwrap();
        let other = random_filter(TimeGrid::new(0.0, 0.02, 4096).unwrap(), 3);
        assert!(matches!(generate_signal(&probe, &other), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn constant_trace_has_unit_contrast() {
        let grid = TimeGrid::default();
        let p = PulseEnvelope::from_fn(grid, |_| 0.4);
        let r = detect_side_peaks(
            &p,
            &[(15.0, EdgeLabel::Rising), (25.0, EdgeLabel::Falling)],
            0.5,
            (17.5, 22.5),
        )
        .unwrap();
        assert_eq!(r.contrast, 1.0);
        assert!(r.peaks.iter().all(|pk| pk.height == r.plateau_level));
    }

    #[test]
    fn synthetic_bumps() {
        let grid = TimeGrid::default();
        let (t_a, t_b) = (15.0, 25.0);
        let bump = |t: f64, c: f64| 0.9 * (-(t - c).powi(2) / (2.0 * 0.05f64.powi(2))).exp();
        let p = PulseEnvelope::from_fn(grid, |t| {
            let plateau = if (t_a..=t_b).contains(&t) { 0.1 } else { 0.0 };
            plateau + bump(t, t_a - 0.2) + bump(t, t_b + 0.2)
        });
        let r = detect_side_peaks(
            &p,
            &[(t_a, EdgeLabel::Rising), (t_b, EdgeLabel::Falling)],
            DEFAULT_PEAK_WINDOW_US,
            central_half(t_a, t_b),
        )
        .unwrap();
        assert!((r.peaks[0].time - (t_a - 0.2)).abs() < 1e-9);
        assert!((r.peaks[1].time - (t_b + 0.2)).abs() < 1e-9);
        assert!((r.contrast - 9.0).abs() < 0.02 * 9.0, "{}", r.contrast);
    }

    #[test]
    fn zero_plateau_is_capped() {
        let grid = TimeGrid::default();
        let p = PulseEnvelope::from_fn(grid, |t| if (t - 15.0).abs() < 0.1 { 1.0 } else { 0.0 });
        let r = detect_side_peaks(&p, &[(15.0, EdgeLabel::Rising)], 0.5, (17.0, 20.0)).unwrap();
        assert_eq!(r.contrast, CONTRAST_CAP);
    }

    #[test]
    fn windows_must_fit() {
        let grid = TimeGrid::default();
        let p = PulseEnvelope::from_fn(grid, |_| 1.0);
        let e = detect_side_peaks(&p, &[(0.2, EdgeLabel::Rising)], 0.5, (10.0, 20.0));
        assert!(matches!(e, Err(Error::WindowOutsideGrid { .. })));
        let e = detect_side_peaks(&p, &[(20.0, EdgeLabel::Rising)], 0.5, (30.0, 50.0));
        assert!(matches!(e, Err(Error::WindowOutsideGrid { .. })));
    }

    #[test]
    fn boundary_guard() {
        let grid = TimeGrid::default();
        let inside = square_pulse(15.0, 25.0, 100.0, grid).unwrap();
        assert!(check_boundary(&inside).is_ok());
        let touching = square_pulse(0.5, 25.0, 100.0, grid).unwrap();
        assert!(matches!(check_boundary(&touching), Err(Error::BoundaryLeak { .. })));
        let pl = toy_pipeline();
        assert!(matches!(pl.transmit(&touching), Err(Error::BoundaryLeak { .. })));
    }

    #[test]
    fn single_row_sweep_matches_standalone_run() {
        let pl = toy_pipeline();
        let shape = HalfGaussianShape::default();
        let swept = pl.sweep_pulse_width(&[3.0], shape).unwrap();
        assert_eq!(swept.rows.len(), 1);

        let probe = half_gaussian_pulse(shape.t_cut, 3.0, shape.orientation, pl.grid()).unwrap();
        let raw = filter_pulse(&probe, pl.filter()).unwrap();
        let report = detect_side_peaks(
            &generate_signal(&probe, pl.filter()).unwrap(),
            &[
                (shape.t_cut, EdgeLabel::Rising),
                (shape.t_cut + 3.0, EdgeLabel::Falling),
            ],
            DEFAULT_PEAK_WINDOW_US,
            central_half(shape.t_cut, shape.t_cut + 3.0),
        )
        .unwrap();
        let row = swept.rows[0];
        assert_eq!(row.param.to_bits(), 3.0f64.to_bits());
        assert_eq!(row.peak_rising.to_bits(), report.height(EdgeLabel::Rising).to_bits());
        assert_eq!(row.peak_falling.to_bits(), report.height(EdgeLabel::Falling).to_bits());
        assert_eq!(row.contrast.to_bits(), report.contrast.to_bits());
        assert_eq!(row.energy_fraction.to_bits(), (raw.energy() / probe.energy()).to_bits());
    }

    #[test]
    fn sweep_rows_are_sorted() {
        let pl = toy_pipeline();
        let r = pl
            .sweep_edge_steepness(&[10.0, 0.1, 100.0, 1.0], SquareShape::default())
            .unwrap();
        let params: Vec<f64> = r.rows.iter().map(|r| r.param).collect();
        assert_eq!(params, vec![0.1, 1.0, 10.0, 100.0]);
    }

    #[test]
    fn failing_row_keeps_earlier_rows() {
        let pl = toy_pipeline();
        let shape = HalfGaussianShape {
            t_cut: 30.0,
            orientation: Orientation::SharpRise,
        };
        // Wide tails wrap past the grid end.
        match pl.sweep_pulse_width(&[6.0, 1.0, 2.0], shape) {
            Err(Error::SweepRow { param, completed, .. }) => {
                assert_eq!(param, 6.0);
                assert_eq!(completed.len(), 2);
                assert_eq!(completed[0].param, 1.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sweep_argument_checks() {
        let pl = toy_pipeline();
        assert!(pl.sweep_pulse_width(&[], HalfGaussianShape::default()).is_err());
        assert!(pl.sweep_pulse_width(&[0.0], HalfGaussianShape::default()).is_err());
        assert!(pl.sweep_detuning(&[f64::NAN], SquareShape::default()).is_err());
    }

    #[test]
    fn detuning_sweep_is_mirror_symmetric_for_real_response() {
        let grid = TimeGrid::default();
        let fg = grid.frequency_grid();
        // Real and even, so only the notch position breaks symmetry.
        let chi3 = SpectralResponse {
            grid: fg,
            amplitude: (0..fg.len)
                .map(|i| C64::from(1.0 / (1.0 + (fg.at(i) / 5.0).powi(2))))
                .collect(),
            time_origin_us: 0.0,
        };
        let params = FilterParams {
            dispersion: Dispersion::Off,
            ..FilterParams::default()
        };
        let pl = Pipeline::from_chi3(chi3, params, grid).unwrap();
        let r = pl.sweep_detuning(&[-10.0, 10.0], SquareShape::default()).unwrap();
        let (a, b) = (r.rows[0].contrast, r.rows[1].contrast);
        assert!((a - b).abs() < 0.02 * a.max(b));
    }
}
