use thiserror::Error;

use crate::expr::{DomainError, ParseError};
use crate::model::CartesianState;
use crate::quad::QuadError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("quadrature failed: {0}")]
    Quad(#[from] QuadError),
    #[error("singular state at time {}: {reason}", state.time)]
    Singular {
        reason: &'static str,
        state: CartesianState,
    },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("system is not conservative; no Hamiltonian in this form")]
    NotConservative,
    #[error("system is time-dependent; the Noether integrals need the autonomous frame")]
    TimeDependent,
    #[error("H = 0: the relation I3 = (I2^2 + 2 I0) / (4H) is undefined")]
    ZeroHamiltonian,
    #[error("maximum step count {limit} exceeded at time {time}")]
    MaxSteps { limit: usize, time: f64 },
    #[error("rho crosses zero between t = {from} and t = {to}; the time map is singular there")]
    RhoZeroCrossing { from: f64, to: f64 },
    #[error("turning point of the angular motion between theta = {from} and theta = {to}")]
    TurningPoint { from: f64, to: f64 },
    #[error("Noether condition {condition} fails for {vector}: max residual {residual:e}")]
    NoetherCondition {
        condition: &'static str,
        vector: String,
        residual: f64,
    },
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("outside the supported regime: {0}")]
    OutOfRange(String),
    #[error("unknown invariant `{0}`")]
    UnknownInvariant(String),
}
