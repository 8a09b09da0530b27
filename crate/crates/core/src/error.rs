use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("constrained steady-state system is singular (pivot ratio {pivot_ratio:.3e})")]
    SingularSystem { pivot_ratio: f64 },

    #[error("time evolution did not converge: |drho/dt| = {residual:.3e} at t = {t_us} us")]
    NotConverged { residual: f64, t_us: f64 },

    #[error("level index ({i}, {j}) out of range 1..=4")]
    IndexOutOfRange { i: usize, j: usize },

    #[error("perturbative extraction broke down: R(omega_pr) = {full}, R(omega_pr/2) = {half}")]
    PerturbativeBreakdown { full: String, half: String },

    #[error("at delta_2 = {delta_2_mhz} MHz: {source}")]
    AtDetuning {
        delta_2_mhz: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("spectrum is empty or identically zero")]
    EmptySpectrum,

    #[error("spectrum does not fall below half maximum on both sides of the peak")]
    NoHalfCrossing,

    #[error("pulse edge at {t_us} us lies outside the time grid [{start}, {end}]")]
    EdgeOutsideGrid { t_us: f64, start: f64, end: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("window [{from}, {to}] us lies outside the time grid")]
    WindowOutsideGrid { from: f64, to: f64 },

    #[error("circular-convolution guard: boundary energy fraction {fraction:.3e} exceeds {limit:.0e}")]
    BoundaryLeak { fraction: f64, limit: f64 },

    #[error("sweep row {param} failed after {} completed rows: {source}", completed.len())]
    SweepRow {
        param: f64,
        completed: Vec<crate::pipeline::SweepRow>,
        #[source]
        source: Box<Error>,
    },

    #[error("coupling timing must contain exactly one off-gap, found {gaps}")]
    NoOffGap { gaps: usize },

    #[error("config parse error: {0}")]
    Parse(String),

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),

    #[error("bandwidth target {target_mhz} MHz not bracketed: fwhm({lo_mhz}) = {f_lo}, fwhm({hi_mhz}) = {f_hi}")]
    CalibrationBracket {
        target_mhz: f64,
        lo_mhz: f64,
        hi_mhz: f64,
        f_lo: f64,
        f_hi: f64,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
