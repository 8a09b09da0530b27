//! Angular-frequency conversions. Internally every rate is in rad/μs.

use std::f64::consts::TAU;

/// Ordinary frequency in MHz to angular frequency in rad/μs.
#[inline]
pub fn mhz(f: f64) -> f64 {
    TAU * f
}

/// Angular frequency in rad/μs to ordinary frequency in MHz.
#[inline]
pub fn to_mhz(omega: f64) -> f64 {
    omega / TAU
}
