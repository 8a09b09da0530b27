//! Inverted-Y four-level atom: rotating-frame Hamiltonian, Lindblad
//! superoperator and its steady state.
//!
//! Levels are numbered 1..=4 in the public API and 0..=3 internally:
//! |1⟩ and |2⟩ are the degenerate ground sublevels, |3⟩ the intermediate
//! state and |4⟩ the upper state. The seed (signal) field drives 1↔3, the
//! coupling field 2↔3, and pump plus probe both drive 3↔4.
//!
//! All rates, Rabi frequencies and detunings are angular frequencies in
//! rad/μs, so `2π · f[MHz]` converts an ordinary frequency in MHz.

use nalgebra::{Matrix4, SMatrix, SVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::mhz;

pub type C64 = Complex64;
pub type Operator = Matrix4<C64>;
pub type SuperOperator = SMatrix<C64, 16, 16>;
pub type StateVector = SVector<C64, 16>;

const I: C64 = C64::new(0.0, 1.0);

/// Tolerance used when checking density-matrix invariants.
pub const STATE_TOL: f64 = 1e-10;
/// Smallest admissible eigenvalue of a density matrix.
pub const EIGEN_TOL: f64 = 1e-8;
/// Pivot ratio below which the constrained steady-state system counts as singular.
const SINGULAR_PIVOT_RATIO: f64 = 1e-12;

/// Position of ρ_ij in the column-stacked vector (0-based).
#[inline]
pub fn vec_index(i: usize, j: usize) -> usize {
    i + 4 * j
}

pub fn vectorize(m: &Operator) -> StateVector {
    StateVector::from_fn(|k, _| m[(k % 4, k / 4)])
}

pub fn unvectorize(v: &StateVector) -> Operator {
    Operator::from_fn(|i, j| v[vec_index(i, j)])
}

/// Kronecker product with `a` as the outer factor.
fn kron(a: &Operator, b: &Operator) -> SuperOperator {
    let mut out = SuperOperator::zeros();
    for ar in 0..4 {
        for ac in 0..4 {
            let s = a[(ar, ac)];
            if s == C64::new(0.0, 0.0) {
                continue;
            }
            for br in 0..4 {
                for bc in 0..4 {
                    out[(4 * ar + br, 4 * ac + bc)] = s * b[(br, bc)];
                }
            }
        }
    }
    out
}

pub(crate) fn max_abs<'a>(it: impl IntoIterator<Item = &'a C64>) -> f64 {
    it.into_iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Decay and relaxation rates of the level scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomScheme {
    /// Total decay rate of |3⟩, shared between |1⟩ and |2⟩.
    pub gamma: f64,
    /// Decay rate of |4⟩ into |3⟩.
    pub gamma_upper: f64,
    /// Population exchange rate |1⟩↔|2⟩ (each direction).
    pub gamma_g: f64,
    /// Pure dephasing rate of the ground-state coherence ρ₁₂.
    pub gamma_12: f64,
    /// Fraction of |3⟩ decay that ends in |1⟩; the rest goes to |2⟩.
    pub branching_1: f64,
}

pub const DEFAULT_GAMMA_MHZ: f64 = 18.0;
pub const DEFAULT_GAMMA_UPPER_MHZ: f64 = 9.0;
pub const DEFAULT_GROUND_FRACTION: f64 = 1e-3;

impl Default for AtomScheme {
    fn default() -> Self {
        let gamma = mhz(DEFAULT_GAMMA_MHZ);
        Self {
            gamma,
            gamma_upper: mhz(DEFAULT_GAMMA_UPPER_MHZ),
            gamma_g: DEFAULT_GROUND_FRACTION * gamma,
            gamma_12: DEFAULT_GROUND_FRACTION * gamma,
            branching_1: 0.5,
        }
    }
}

impl AtomScheme {
    pub fn new(gamma: f64, gamma_upper: f64, gamma_g: f64, gamma_12: f64, branching_1: f64) -> Result<Self> {
        let s = Self {
            gamma,
            gamma_upper,
            gamma_g,
            gamma_12,
            branching_1,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn branching_2(&self) -> f64 {
        1.0 - self.branching_1
    }

    /// Full invariant check (strictly positive decay and exchange rates).
    pub fn validate(&self) -> Result<()> {
        self.check_finite()?;
        if self.gamma <= 0.0 {
            return Err(Error::invalid("gamma", "must be > 0"));
        }
        if self.gamma_upper <= 0.0 {
            return Err(Error::invalid("gamma_upper", "must be > 0"));
        }
        if self.gamma_g <= 0.0 {
            return Err(Error::invalid("gamma_g", "must be > 0"));
        }
        Ok(())
    }

    /// Weaker check used when assembling the superoperator: rates must be
    /// finite and non-negative, zero rates are allowed.
    fn check_finite(&self) -> Result<()> {
        let rates = [
            self.gamma,
            self.gamma_upper,
            self.gamma_g,
            self.gamma_12,
            self.branching_1,
        ];
        if rates.iter().any(|r| !r.is_finite()) {
            return Err(Error::NonFinite("atom scheme rates"));
        }
        if rates[..4].iter().any(|r| *r < 0.0) {
            return Err(Error::invalid("atom scheme", "rates must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.branching_1) {
            return Err(Error::invalid("branching_1", "must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            gamma: self.gamma * factor,
            gamma_upper: self.gamma_upper * factor,
            gamma_g: self.gamma_g * factor,
            gamma_12: self.gamma_12 * factor,
            branching_1: self.branching_1,
        }
    }
}

/// Rabi frequencies and detunings of the four fields.
///
/// Only two detunings are stored. The pump is frequency-degenerate with the
/// probe (Δ_p = Δ₁) and the coupling detuning equals the signal detuning
/// (Δ_c = Δ₂); these are the only choices for which the four-field rotating
/// frame is time independent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveFields {
    pub omega_c: C64,
    pub omega_p: C64,
    pub omega_pr: C64,
    pub omega_s: C64,
    pub delta_1: f64,
    pub delta_2: f64,
}

/// Calibrated coupling Rabi frequency, the output of the FWHM bisection.
pub const DEFAULT_OMEGA_C_MHZ: f64 = 3.531_127_929_687_5;
pub const DEFAULT_OMEGA_P_MHZ: f64 = 3.0;
pub const DEFAULT_OMEGA_PR_MHZ: f64 = 0.3;
pub const DEFAULT_OMEGA_S_MHZ: f64 = 0.003;

impl Default for DriveFields {
    fn default() -> Self {
        Self::real(
            mhz(DEFAULT_OMEGA_C_MHZ),
            mhz(DEFAULT_OMEGA_P_MHZ),
            mhz(DEFAULT_OMEGA_PR_MHZ),
            mhz(DEFAULT_OMEGA_S_MHZ),
        )
    }
}

/// Seed strength relative to `gamma` above which it stops being perturbative.
pub const MAX_SEED_FRACTION: f64 = 1e-2;
/// Probe strength relative to `gamma` above which extraction is not attempted.
pub const MAX_PROBE_FRACTION: f64 = 1e-1;

impl DriveFields {
    pub fn zero() -> Self {
        Self {
            omega_c: C64::new(0.0, 0.0),
            omega_p: C64::new(0.0, 0.0),
            omega_pr: C64::new(0.0, 0.0),
            omega_s: C64::new(0.0, 0.0),
            delta_1: 0.0,
            delta_2: 0.0,
        }
    }

    /// Real-valued fields, all arguments in rad/μs.
    pub fn real(omega_c: f64, omega_p: f64, omega_pr: f64, omega_s: f64) -> Self {
        Self {
            omega_c: omega_c.into(),
            omega_p: omega_p.into(),
            omega_pr: omega_pr.into(),
            omega_s: omega_s.into(),
            delta_1: 0.0,
            delta_2: 0.0,
        }
    }

    pub fn with_detunings(mut self, delta_1: f64, delta_2: f64) -> Self {
        self.delta_1 = delta_1;
        self.delta_2 = delta_2;
        self
    }

    pub fn delta_c(&self) -> f64 {
        self.delta_2
    }

    pub fn delta_p(&self) -> f64 {
        self.delta_1
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [self.omega_c, self.omega_p, self.omega_pr, self.omega_s];
        if fields.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())
            || !self.delta_1.is_finite()
            || !self.delta_2.is_finite()
        {
            return Err(Error::NonFinite("drive fields"));
        }
        Ok(())
    }

    /// Seed and probe must be weak compared with the intermediate-state decay.
    pub fn check_perturbative(&self, scheme: &AtomScheme) -> Result<()> {
        if self.omega_s.norm() > MAX_SEED_FRACTION * scheme.gamma {
            return Err(Error::invalid(
                "omega_s",
                format!("|omega_s| must be <= {MAX_SEED_FRACTION} * gamma"),
            ));
        }
        if self.omega_pr.norm() > MAX_PROBE_FRACTION * scheme.gamma {
            return Err(Error::invalid(
                "omega_pr",
                format!("|omega_pr| must be <= {MAX_PROBE_FRACTION} * gamma"),
            ));
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            omega_c: self.omega_c * factor,
            omega_p: self.omega_p * factor,
            omega_pr: self.omega_pr * factor,
            omega_s: self.omega_s * factor,
            delta_1: self.delta_1 * factor,
            delta_2: self.delta_2 * factor,
        }
    }
}

/// Hamiltonian in the static rotating frame (ħ = 1).
pub fn build_hamiltonian(scheme: &AtomScheme, drives: &DriveFields) -> Result<Operator> {
    scheme.check_finite()?;
    drives.validate()?;
    let mut h = Operator::zeros();
    h[(2, 2)] = C64::from(-drives.delta_2);
    h[(3, 3)] = C64::from(-(drives.delta_2 + drives.delta_1));
    let mut couple = |a: usize, b: usize, omega: C64| {
        h[(a, b)] = -omega / 2.0;
        h[(b, a)] = -omega.conj() / 2.0;
    };
    couple(0, 2, drives.omega_s);
    couple(1, 2, drives.omega_c);
    couple(2, 3, drives.omega_p + drives.omega_pr);
    Ok(h)
}

fn projector(i: usize, j: usize) -> Operator {
    let mut m = Operator::zeros();
    m[(i, j)] = C64::new(1.0, 0.0);
    m
}

/// Collapse operators with their rates folded in as √rate.
///
/// The dephasing operator √(γ₁₂/2)(|1⟩⟨1| − |2⟩⟨2|) damps ρ₁₂ at exactly γ₁₂.
pub fn collapse_operators(scheme: &AtomScheme) -> Vec<Operator> {
    let terms = [
        (scheme.branching_1 * scheme.gamma, projector(0, 2)),
        (scheme.branching_2() * scheme.gamma, projector(1, 2)),
        (scheme.gamma_upper, projector(2, 3)),
        (scheme.gamma_g, projector(0, 1)),
        (scheme.gamma_g, projector(1, 0)),
        (scheme.gamma_12 / 2.0, projector(0, 0) - projector(1, 1)),
    ];
    terms
        .into_iter()
        .filter(|(rate, _)| *rate > 0.0)
        .map(|(rate, op)| op * C64::from(rate.sqrt()))
        .collect()
}

/// Lindblad generator acting on column-stacked density matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Liouvillian {
    pub matrix: SuperOperator,
}

impl Liouvillian {
    pub fn apply(&self, rho: &Operator) -> Operator {
        unvectorize(&(self.matrix * vectorize(rho)))
    }

    /// Maximum row sum of absolute values.
    pub fn inf_norm(&self) -> f64 {
        (0..16)
            .map(|r| self.matrix.row(r).iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

pub fn build_liouvillian(scheme: &AtomScheme, drives: &DriveFields) -> Result<Liouvillian> {
    let h = build_hamiltonian(scheme, drives)?;
    let id = Operator::identity();
    let mut m = (kron(&id, &h) - kron(&h.transpose(), &id)) * (-I);
    for l in collapse_operators(scheme) {
        let ldl = l.adjoint() * l;
        m += kron(&l.conjugate(), &l);
        m -= (kron(&id, &ldl) + kron(&ldl.transpose(), &id)) * C64::from(0.5);
    }
    Ok(Liouvillian { matrix: m })
}

/// A validated 4×4 density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    rho: Operator,
}

impl DensityMatrix {
    pub fn new(rho: Operator) -> Result<Self> {
        let d = Self { rho };
        d.validate()?;
        Ok(d)
    }

    /// Pure state |level⟩⟨level|, `level` in 1..=4.
    pub fn pure(level: usize) -> Result<Self> {
        if !(1..=4).contains(&level) {
            return Err(Error::IndexOutOfRange { i: level, j: level });
        }
        Ok(Self {
            rho: projector(level - 1, level - 1),
        })
    }

    pub fn matrix(&self) -> &Operator {
        &self.rho
    }

    pub fn trace(&self) -> C64 {
        self.rho.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        max_abs((self.rho - self.rho.adjoint()).iter())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (self.rho + self.rho.adjoint()) * C64::from(0.5);
        herm.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("density matrix"));
        }
        if self.hermiticity_error() > STATE_TOL {
            return Err(Error::invalid("rho", "not Hermitian"));
        }
        if (self.trace() - C64::new(1.0, 0.0)).norm() > STATE_TOL {
            return Err(Error::invalid("rho", "trace differs from 1"));
        }
        if self.min_eigenvalue() < -EIGEN_TOL {
            return Err(Error::invalid("rho", "not positive semidefinite"));
        }
        Ok(())
    }

    pub fn population(&self, level: usize) -> f64 {
        self.rho[(level - 1, level - 1)].re
    }
}

/// Element ρ_ij with 1-based level indices.
pub fn coherence(rho: &DensityMatrix, i: usize, j: usize) -> Result<C64> {
    if !(1..=4).contains(&i) || !(1..=4).contains(&j) {
        return Err(Error::IndexOutOfRange { i, j });
    }
    Ok(rho.rho[(i - 1, j - 1)])
}

/// Unique steady state: solves L·vec(ρ) = 0 with the ρ₁₁ row replaced by
/// the unit-trace constraint.
pub fn steady_state(l: &Liouvillian) -> Result<DensityMatrix> {
    let mut a = l.matrix;
    for c in 0..16 {
        a[(0, c)] = C64::new(0.0, 0.0);
    }
    for i in 0..4 {
        a[(0, vec_index(i, i))] = C64::new(1.0, 0.0);
    }
    let mut b = StateVector::zeros();
    b[0] = C64::new(1.0, 0.0);

    let lu = a.full_piv_lu();
    let diag = lu.u().diagonal();
    let largest = max_abs(diag.iter());
    let smallest = diag.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    let pivot_ratio = if largest > 0.0 { smallest / largest } else { 0.0 };
    if !(pivot_ratio > SINGULAR_PIVOT_RATIO) {
        return Err(Error::SingularSystem { pivot_ratio });
    }
    let x = lu.solve(&b).ok_or(Error::SingularSystem { pivot_ratio })?;

    let raw = unvectorize(&x);
    let mut rho = (raw + raw.adjoint()) * C64::from(0.5);
    let tr = rho.trace();
    rho /= tr;

    let residual = max_abs((l.matrix * vectorize(&rho)).iter());
    if residual > 1e-10 * l.inf_norm().max(1.0) {
        return Err(Error::SingularSystem { pivot_ratio });
    }
    DensityMatrix::new(rho)
}

/// One fourth-order Taylor (classical RK4) propagator for a linear system.
fn rk4_propagator(l: &SuperOperator, h: f64) -> SuperOperator {
    let a = l * C64::from(h);
    let a2 = a * a;
    let a3 = a2 * a;
    let a4 = a3 * a;
    SuperOperator::identity() + a + a2 * C64::from(0.5) + a3 * C64::from(1.0 / 6.0) + a4 * C64::from(1.0 / 24.0)
}

/// Step-doubling tolerance for accepting an RK4 step size.
const STEP_TOL: f64 = 1e-12;

/// Fixed-step RK4 evolution of dρ/dt = L ρ, calling `observe(t, ρ)` after
/// every step. The step starts at 1/‖L‖∞ and is halved until one full step
/// and two half steps agree to 1e-12.
pub fn evolve_observed(
    l: &Liouvillian,
    rho0: &DensityMatrix,
    t_max: f64,
    tol: f64,
    observe: impl FnMut(f64, &Operator),
) -> Result<DensityMatrix> {
    evolve_strided(l, rho0, t_max, tol, 0, observe)
}

/// Same RK4 trajectory as [`evolve_observed`], sampled every 64 steps.
pub fn evolve_to_steady(l: &Liouvillian, rho0: &DensityMatrix, t_max: f64, tol: f64) -> Result<DensityMatrix> {
    evolve_strided(l, rho0, t_max, tol, 6, |_, _| {})
}

fn evolve_strided(
    l: &Liouvillian,
    rho0: &DensityMatrix,
    t_max: f64,
    tol: f64,
    doublings: u32,
    mut observe: impl FnMut(f64, &Operator),
) -> Result<DensityMatrix> {
    rho0.validate()?;
    if !(t_max > 0.0) || !t_max.is_finite() {
        return Err(Error::invalid("t_max", "must be finite and > 0"));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", "must be > 0"));
    }
    let norm = l.inf_norm();
    let mut y = vectorize(rho0.matrix());
    if norm == 0.0 {
        return Ok(rho0.clone());
    }

    let mut h = 1.0 / norm;
    let mut step = loop {
        let full = rk4_propagator(&l.matrix, h);
        let half = rk4_propagator(&l.matrix, h / 2.0);
        let two = half * half;
        if max_abs((full - two).iter()) <= STEP_TOL {
            break two;
        }
        h /= 2.0;
        if h * norm < 1e-9 {
            return Err(Error::NotConverged {
                residual: f64::NAN,
                t_us: 0.0,
            });
        }
    };
    for _ in 0..doublings {
        step = step * step;
        h *= 2.0;
    }

    let mut t = 0.0;
    loop {
        let residual = max_abs((l.matrix * y).iter());
        if residual < tol {
            break;
        }
        if t >= t_max {
            return Err(Error::NotConverged { residual, t_us: t });
        }
        y = step * y;
        t += h;
        observe(t, &unvectorize(&y));
    }
    let rho = unvectorize(&y);
    let rho = (rho + rho.adjoint()) * C64::from(0.5);
    DensityMatrix::new(rho / rho.trace())
}
