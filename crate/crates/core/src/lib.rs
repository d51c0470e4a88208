//! Robust H∞ coherent feedback synthesis for optical parametric oscillators
//! whose pump phase and amplitude fluctuate.
//!
//! The pipeline runs bottom-up through the modules:
//!
//! - [`model`] builds the quadrature state-space plant and its norm-bounded
//!   uncertainty decompositions.
//! - [`riccati`] solves the two scaled Riccati equations through Hamiltonian
//!   stable subspaces and evaluates closed-form existence conditions.
//! - [`synthesis`] assembles the central controller and the nominal baseline.
//! - [`realizability`] adds quantum-noise channels so the controller preserves
//!   commutation relations, and reads off passive cavity decay rates.
//! - [`hinf`] closes the loop at frozen uncertainty, computes H∞ norms and
//!   checks quadratic stability.

pub mod error;
pub mod hinf;
pub mod mat;
pub mod model;
pub mod realizability;
pub mod riccati;
pub mod synthesis;

pub use error::{Error, ErrorClass, Result};
pub use mat::{CMat, Mat, MatError};
pub use model::{build_plant, delta_a, rho_bound, Decomposition, OpoParams, UncertainPlant};
