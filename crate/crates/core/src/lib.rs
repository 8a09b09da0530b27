#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Simulator for spectral filtering of four-wave-mixing signals in an
//! inverted-Y four-level cold-atom ensemble.
//!
//! The chain is: steady-state density matrix of the driven atom ([`atom`]),
//! numerically extracted FWM response and linear absorption ([`spectra`]),
//! pulse generation and Fourier transforms ([`pulses`]), filtering and
//! side-peak analysis ([`pipeline`]), and a phenomenological spin-wave
//! memory for the backward side peak ([`storage`]).

pub mod atom;
pub mod config;
pub mod csv;
pub mod error;
pub mod pipeline;
pub mod presets;
pub mod pulses;
pub mod runner;
pub mod spectra;
pub mod storage;
pub mod units;

pub use error::{Error, Result};
