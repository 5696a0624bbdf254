//! S-spectrum estimates for the Dirac operators on hyperbolic and spherical space.
//!
//! Layers, bottom up:
//! - [`clifford`]: the algebra ℝₙ and paravectors.
//! - [`fields`]: box domains, polynomial multivector fields, grid functions and norms.
//! - [`operators`]: exact Dirac-type operators on polynomial fields.
//! - [`regions`]: closed-form admissibility conditions and coercivity constants.
//! - [`assembly`]: Galerkin discretization of the spectral problems and their solution.
//! - [`cli`]: the command-line front end.

pub mod assembly;
pub mod cli;
pub mod clifford;
pub mod error;
pub mod fields;
pub mod operators;
pub mod quadrature;
pub mod regions;
pub mod sparse;

pub use error::{Error, Result};
