//! Simulation and analysis toolkit for electromagnetically induced
//! transparency and slow light in anti-relaxation-coated Rb vapor cells.
//!
//! Module map:
//! - [`atomkit`]: constants, isotope data and unit conversions
//! - [`lambda_solver`]: Λ-system susceptibility, EIT and double resonance
//! - [`coated_cell`]: two-ensemble coated-cell model, Monte Carlo transits,
//!   radiation trapping and repumping
//! - [`pulsewave`]: linear pulse propagation and delay/reshaping metrics
//! - [`fitlab`]: Levenberg–Marquardt lineshape fits and pulse metrology
//! - [`scenario`]: configuration files, presets, sweeps and artifact output

// `!(x > 0.0)` is used deliberately so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod atomkit;
pub mod coated_cell;
pub mod fitlab;
pub mod csvio;
pub mod error;
pub mod lambda_solver;
pub mod pulsewave;
#[allow(non_snake_case)]
pub mod scenario;
pub mod spectrum;

pub use error::{Error, Result};
pub use spectrum::{Spectrum, SpectrumKind, SpectrumValues};
