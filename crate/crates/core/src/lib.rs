//! Free fermions under adaptive measurement-and-feedback circuits.
//!
//! - [`fgs`]: pure Gaussian states, gates, occupation measurements, entropies.
//! - [`ed`]: brute-force Fock-space reference for small rings.
//! - [`circuit`]: the adaptive brickwork protocol with classical flags.
//! - [`observables`]: flag density, charge imbalance, entropy profiles, ensembles.
//! - [`classical`]: the stochastic bitstring twin and a BARW reference process.
//! - [`scaling`]: power-law fits, data collapse and critical-point scans.

pub mod circuit;
pub mod classical;
pub mod crosscheck;
pub mod ed;
pub mod error;
pub mod fgs;
pub mod observables;
pub mod scaling;

pub use error::{Error, Result};
