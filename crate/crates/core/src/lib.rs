//! Structure-preserving integration of the periodic semilinear wave equation
//!
//! ```text
//! u_tt - u_xx + rho u + g(u) = 0,   x in [-pi, pi] periodic
//! ```
//!
//! discretized pseudo-spectrally in space and in time by the energy-preserving
//! adapted average vector field (AAVF) method, together with diagnostics for
//! the long-time behaviour of energy, momentum and actions.

pub mod error;
pub mod harness;
pub mod integrator;
pub mod resonance;
pub mod spectral;
pub mod system;

pub use error::{Error, Result};
