//! Numerical toolkit for the two-dimensional generalized Ermakov system.

pub mod analytic;
pub mod dynamics;
mod error;
pub mod expr;
pub mod integrate;
pub mod invariants;
pub mod model;
pub mod noether;
pub mod numdiff;
pub mod quad;
pub mod reduce;

pub use error::{Error, Result};
pub use expr::{parse_expression, Expression};
pub use model::{CartesianState, PolarState, SystemForm, SystemSpec};
