//! Run configuration. Files are TOML with rates, Rabi frequencies and
//! detunings in plain MHz and times in μs; conversion to angular units
//! happens here. Unknown keys are rejected.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::atom::{self, AtomScheme, DriveFields};
use crate::error::{Error, Result};
use crate::pipeline::{HalfGaussianShape, SquareShape, DEFAULT_PEAK_WINDOW_US};
use crate::pulses::{self, half_gaussian_pulse, square_pulse, Orientation, PulseEnvelope, TimeGrid};
use crate::spectra::{self, Dispersion, FilterParams, FrequencyGrid, SweepMode};
use crate::storage::StorageParams;
use crate::units::mhz;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// FWM response, transmission and combined filter on the spectrum grid.
    Spectrum,
    /// Probe, its spectrum, filtered spectrum and output; optional k sweep.
    Chain,
    SidePeaks,
    DetuningSweep,
    WidthSweep,
    Storage,
    Calibrate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub name: String,
    pub task: Task,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            name: "custom".into(),
            task: Task::SidePeaks,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AtomConfig {
    pub gamma_mhz: f64,
    pub gamma_upper_mhz: f64,
    pub gamma_g_mhz: f64,
    pub gamma_12_mhz: f64,
    pub branching_1: f64,
}

impl Default for AtomConfig {
    fn default() -> Self {
        let g = atom::DEFAULT_GAMMA_MHZ;
        Self {
            gamma_mhz: g,
            gamma_upper_mhz: atom::DEFAULT_GAMMA_UPPER_MHZ,
            gamma_g_mhz: atom::DEFAULT_GROUND_FRACTION * g,
            gamma_12_mhz: atom::DEFAULT_GROUND_FRACTION * g,
            branching_1: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DrivesConfig {
    pub omega_c_mhz: f64,
    pub omega_p_mhz: f64,
    pub omega_pr_mhz: f64,
    pub omega_s_mhz: f64,
}

impl Default for DrivesConfig {
    fn default() -> Self {
        Self {
            omega_c_mhz: atom::DEFAULT_OMEGA_C_MHZ,
            omega_p_mhz: atom::DEFAULT_OMEGA_P_MHZ,
            omega_pr_mhz: atom::DEFAULT_OMEGA_PR_MHZ,
            omega_s_mhz: atom::DEFAULT_OMEGA_S_MHZ,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterConfig {
    pub mode: SweepMode,
    pub alpha: f64,
    pub gamma_mhz: f64,
    pub center_offset_mhz: f64,
    pub dispersion: Dispersion,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            mode: SweepMode::TwoPhotonLocked,
            alpha: spectra::DEFAULT_ALPHA,
            gamma_mhz: spectra::DEFAULT_ABSORPTION_HALF_WIDTH_MHZ,
            center_offset_mhz: 0.0,
            dispersion: Dispersion::Off,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    pub half_span_mhz: f64,
    pub points: usize,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            half_span_mhz: 40.0,
            points: 801,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationConfig {
    pub target_fwhm_mhz: f64,
    pub lo_mhz: f64,
    pub hi_mhz: f64,
    pub tol_mhz: f64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            target_fwhm_mhz: spectra::TARGET_FWHM_MHZ,
            lo_mhz: spectra::CALIBRATION_BRACKET_MHZ.0,
            hi_mhz: spectra::CALIBRATION_BRACKET_MHZ.1,
            tol_mhz: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub t_start_us: f64,
    pub dt_us: f64,
    pub samples: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            t_start_us: 0.0,
            dt_us: pulses::DEFAULT_DT_US,
            samples: pulses::DEFAULT_SAMPLES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Square,
    HalfGaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PulseConfig {
    pub shape: Shape,
    pub t_a_us: f64,
    pub t_b_us: f64,
    /// μs⁻²
    pub k: f64,
    pub t_cut_us: f64,
    pub delta_t_us: f64,
    pub orientation: Orientation,
    pub peak_window_us: f64,
}

impl Default for PulseConfig {
    fn default() -> Self {
        let sq = SquareShape::default();
        let hg = HalfGaussianShape::default();
        Self {
            shape: Shape::Square,
            t_a_us: sq.t_a,
            t_b_us: sq.t_b,
            k: sq.k,
            t_cut_us: hg.t_cut,
            delta_t_us: 3.0,
            orientation: hg.orientation,
            peak_window_us: DEFAULT_PEAK_WINDOW_US,
        }
    }
}

impl PulseConfig {
    pub fn square(&self) -> SquareShape {
        SquareShape {
            t_a: self.t_a_us,
            t_b: self.t_b_us,
            k: self.k,
        }
    }

    pub fn half_gaussian(&self) -> HalfGaussianShape {
        HalfGaussianShape {
            t_cut: self.t_cut_us,
            orientation: self.orientation,
        }
    }

    pub fn envelope(&self, grid: TimeGrid) -> Result<PulseEnvelope> {
        match self.shape {
            Shape::Square => square_pulse(self.t_a_us, self.t_b_us, self.k, grid),
            Shape::HalfGaussian => half_gaussian_pulse(self.t_cut_us, self.delta_t_us, self.orientation, grid),
        }
    }

    fn check(&self, at: &str, grid: Option<TimeGrid>, errs: &mut Vec<String>) {
        let inside = |t: f64| grid.is_none_or(|g| g.contains(t));
        match self.shape {
            Shape::Square => {
                if !(self.t_a_us < self.t_b_us) {
                    errs.push(format!("{at}.t_a_us: must be < t_b_us"));
                }
                for (key, t) in [("t_a_us", self.t_a_us), ("t_b_us", self.t_b_us)] {
                    if !t.is_finite() || !inside(t) {
                        errs.push(format!("{at}.{key}: {t} lies outside the time grid"));
                    }
                }
                if !(self.k > 0.0) || !self.k.is_finite() {
                    errs.push(format!("{at}.k: must be finite and > 0"));
                }
            }
            Shape::HalfGaussian => {
                if !self.t_cut_us.is_finite() || !inside(self.t_cut_us) {
                    errs.push(format!("{at}.t_cut_us: {} lies outside the time grid", self.t_cut_us));
                }
                if !(self.delta_t_us > 0.0) || !self.delta_t_us.is_finite() {
                    errs.push(format!("{at}.delta_t_us: must be finite and > 0"));
                }
            }
        }
        if !(self.peak_window_us > 0.0) || !self.peak_window_us.is_finite() {
            errs.push(format!("{at}.peak_window_us: must be finite and > 0"));
        }
    }
}

/// One storage scenario: a probe and the time the control fields go off.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StorageCase {
    pub label: String,
    pub t_off_us: f64,
    pub pulse: PulseConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StorageConfig {
    pub eta: f64,
    pub tau_s_us: f64,
    pub write_window_us: f64,
    pub readout_rate_per_us: f64,
    pub gap_us: f64,
    pub cases: Vec<StorageCase>,
}

impl Default for StorageConfig {
    fn default() -> Self {
        let p = StorageParams::default();
        Self {
            eta: p.eta,
            tau_s_us: p.tau_s,
            write_window_us: p.write_window,
            readout_rate_per_us: p.readout_rate,
            gap_us: 12.0,
            cases: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub values: Vec<f64>,
    /// Cutoff for the spectral-energy table of width sweeps.
    pub cutoff_mhz: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            values: Vec::new(),
            cutoff_mhz: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub directory: Option<String>,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: None,
            formats: vec![Format::Csv, Format::Json, Format::Svg],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub run: RunSection,
    pub atom: AtomConfig,
    pub drives: DrivesConfig,
    pub filter: FilterConfig,
    pub spectrum: SpectrumConfig,
    pub calibration: CalibrationConfig,
    pub grid: GridConfig,
    pub pulse: PulseConfig,
    pub storage: StorageConfig,
    pub sweep: SweepConfig,
    pub output: OutputConfig,
}

fn positive(errs: &mut Vec<String>, key: &str, v: f64) {
    if !v.is_finite() || v <= 0.0 {
        errs.push(format!("{key}: must be finite and > 0 (got {v})"));
    }
}

fn non_negative(errs: &mut Vec<String>, key: &str, v: f64) {
    if !v.is_finite() || v < 0.0 {
        errs.push(format!("{key}: must be finite and >= 0 (got {v})"));
    }
}

impl SimulationConfig {
    /// Parses and validates.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Fully resolved form, every key present.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Every violated invariant, not just the first.
    pub fn violations(&self) -> Vec<String> {
        let mut e = Vec::new();
        let a = &self.atom;
        positive(&mut e, "atom.gamma_mhz", a.gamma_mhz);
        positive(&mut e, "atom.gamma_upper_mhz", a.gamma_upper_mhz);
        positive(&mut e, "atom.gamma_g_mhz", a.gamma_g_mhz);
        non_negative(&mut e, "atom.gamma_12_mhz", a.gamma_12_mhz);
        if !(0.0..=1.0).contains(&a.branching_1) {
            e.push(format!("atom.branching_1: must lie in [0, 1] (got {})", a.branching_1));
        }

        let d = &self.drives;
        for (key, v) in [
            ("drives.omega_c_mhz", d.omega_c_mhz),
            ("drives.omega_p_mhz", d.omega_p_mhz),
        ] {
            non_negative(&mut e, key, v);
        }
        positive(&mut e, "drives.omega_pr_mhz", d.omega_pr_mhz);
        positive(&mut e, "drives.omega_s_mhz", d.omega_s_mhz);
        if a.gamma_mhz > 0.0 {
            if d.omega_s_mhz > atom::MAX_SEED_FRACTION * a.gamma_mhz {
                e.push(format!(
                    "drives.omega_s_mhz: must not exceed {} x atom.gamma_mhz",
                    atom::MAX_SEED_FRACTION
                ));
            }
            if d.omega_pr_mhz > atom::MAX_PROBE_FRACTION * a.gamma_mhz {
                e.push(format!(
                    "drives.omega_pr_mhz: must not exceed {} x atom.gamma_mhz",
                    atom::MAX_PROBE_FRACTION
                ));
            }
        }

        let f = &self.filter;
        non_negative(&mut e, "filter.alpha", f.alpha);
        positive(&mut e, "filter.gamma_mhz", f.gamma_mhz);
        if !f.center_offset_mhz.is_finite() {
            e.push("filter.center_offset_mhz: must be finite".into());
        }

        positive(&mut e, "spectrum.half_span_mhz", self.spectrum.half_span_mhz);
        if self.spectrum.points < 2 {
            e.push("spectrum.points: must be >= 2".into());
        }

        let c = &self.calibration;
        positive(&mut e, "calibration.target_fwhm_mhz", c.target_fwhm_mhz);
        positive(&mut e, "calibration.lo_mhz", c.lo_mhz);
        positive(&mut e, "calibration.tol_mhz", c.tol_mhz);
        if !(c.hi_mhz > c.lo_mhz) {
            e.push("calibration.hi_mhz: must exceed calibration.lo_mhz".into());
        }

        let g = &self.grid;
        if !g.t_start_us.is_finite() {
            e.push("grid.t_start_us: must be finite".into());
        }
        positive(&mut e, "grid.dt_us", g.dt_us);
        if g.samples < 8 || !g.samples.is_power_of_two() {
            e.push(format!("grid.samples: must be a power of two >= 8 (got {})", g.samples));
        }
        let grid = self.time_grid().ok();
        self.pulse.check("pulse", grid, &mut e);

        let s = &self.storage;
        if !(s.eta >= 0.0 && s.eta <= 1.0) {
            e.push(format!("storage.eta: must lie in [0, 1] (got {})", s.eta));
        }
        positive(&mut e, "storage.tau_s_us", s.tau_s_us);
        positive(&mut e, "storage.write_window_us", s.write_window_us);
        positive(&mut e, "storage.readout_rate_per_us", s.readout_rate_per_us);
        positive(&mut e, "storage.gap_us", s.gap_us);
        for (i, case) in s.cases.iter().enumerate() {
            let at = format!("storage.cases[{i}]");
            case.pulse.check(&format!("{at}.pulse"), grid, &mut e);
            if let Some(g) = grid {
                let t_on = case.t_off_us + s.gap_us;
                if !case.t_off_us.is_finite() || !g.contains(case.t_off_us) || !g.contains(t_on) {
                    e.push(format!(
                        "{at}.t_off_us: off-gap [{}, {t_on}] must lie inside the time grid",
                        case.t_off_us
                    ));
                }
            }
        }

        if self.sweep.values.iter().any(|v| !v.is_finite()) {
            e.push("sweep.values: must be finite".into());
        }
        positive(&mut e, "sweep.cutoff_mhz", self.sweep.cutoff_mhz);

        match self.run.task {
            Task::DetuningSweep | Task::WidthSweep if self.sweep.values.is_empty() => {
                e.push("sweep.values: must be nonempty for this task".into());
            }
            Task::WidthSweep if self.sweep.values.iter().any(|&v| v <= 0.0) => {
                e.push("sweep.values: widths must be > 0".into());
            }
            Task::Chain if self.sweep.values.iter().any(|&v| v <= 0.0) => {
                e.push("sweep.values: edge coefficients must be > 0".into());
            }
            Task::DetuningSweep if self.pulse.shape != Shape::Square => {
                e.push("pulse.shape: the detuning sweep uses a square probe".into());
            }
            Task::Chain if !self.sweep.values.is_empty() && self.pulse.shape != Shape::Square => {
                e.push("pulse.shape: the edge-coefficient sweep uses a square probe".into());
            }
            Task::Storage if s.cases.is_empty() => {
                e.push("storage.cases: must be nonempty for the storage task".into());
            }
            _ => {}
        }
        if self.run.name.is_empty()
            || !self
                .run
                .name
                .chars()
                .all(|ch| ch.is_ascii_alphanumeric() || ch == '_' || ch == '-')
        {
            e.push("run.name: must be nonempty and contain only [A-Za-z0-9_-]".into());
        }
        e
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }

    pub fn scheme(&self) -> Result<AtomScheme> {
        let a = &self.atom;
        AtomScheme::new(
            mhz(a.gamma_mhz),
            mhz(a.gamma_upper_mhz),
            mhz(a.gamma_g_mhz),
            mhz(a.gamma_12_mhz),
            a.branching_1,
        )
    }

    pub fn drives(&self) -> DriveFields {
        let d = &self.drives;
        DriveFields {
            omega_c: C64::from(mhz(d.omega_c_mhz)),
            omega_p: C64::from(mhz(d.omega_p_mhz)),
            omega_pr: C64::from(mhz(d.omega_pr_mhz)),
            omega_s: C64::from(mhz(d.omega_s_mhz)),
            delta_1: 0.0,
            delta_2: 0.0,
        }
    }

    pub fn filter_params(&self) -> FilterParams {
        FilterParams {
            alpha: self.filter.alpha,
            gamma: mhz(self.filter.gamma_mhz),
            center_offset: self.filter.center_offset_mhz,
            dispersion: self.filter.dispersion,
        }
    }

    pub fn frequency_grid(&self) -> Result<FrequencyGrid> {
        FrequencyGrid::symmetric(self.spectrum.half_span_mhz, self.spectrum.points)
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.grid.t_start_us, self.grid.dt_us, self.grid.samples)
    }

    pub fn storage_params(&self) -> StorageParams {
        let s = &self.storage;
        StorageParams {
            eta: s.eta,
            tau_s: s.tau_s_us,
            write_window: s.write_window_us,
            readout_rate: s.readout_rate_per_us,
        }
    }
}
