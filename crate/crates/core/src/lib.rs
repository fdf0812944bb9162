//! Equilibrium envelopes, weighted Bergman kernels and Monge-Ampere measures
//! for radial metrics on `O(m)` over the Riemann sphere.

pub mod bergman;
pub mod cli;
pub mod envelope;
pub mod error;
pub mod gram;
pub mod grid;
pub mod output;
pub mod presets;
pub mod quadrature;
pub mod verify;
pub mod weight;

pub use error::{LabError, Result};
