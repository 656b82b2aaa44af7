//! Vibronic dimer pump-probe simulation and the NSIT coherence witness.
//!
//! The crate is `no_std` (with `alloc`). Everything here is pure computation:
//! building the Frenkel-Holstein dimer, propagating it under Gaussian pulses,
//! recovering the population-to-population process-tensor elements from four
//! pump-probe signals, and evaluating the witness `W^b`.
//!
//! Energies cross the API in cm⁻¹; internally ħ = 1, time is in fs and
//! angular frequency in rad/fs. [`units`] holds the only conversion.
#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod model;
pub mod optics;
pub mod params;
pub mod process;
pub mod protocol;
pub mod units;
pub mod vec3;

pub(crate) mod math;

pub use error::{Error, Result};
pub use num_complex::Complex64;
