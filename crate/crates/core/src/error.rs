use thiserror::Error;

use crate::analysis::ConvergenceReport;

pub type Result<T, E = DuhemError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone)]
pub enum DuhemError {
    /// A constituent function returned NaN or an infinity.
    #[error("non-finite evaluation of {function} at {at:?}")]
    NonFiniteEvaluation { function: String, at: Vec<f64> },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("step size underflow at t = {t}: h = {h:e}")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("adaptive quadrature exceeded depth cap {depth} on [{a}, {b}]")]
    QuadratureFailure { a: f64, b: f64, depth: u32 },

    #[error("could not invert {function} at y = {y}: bracket expansion exhausted")]
    InversionFailure { function: String, y: f64 },

    #[error("no sign change found while bracketing the limit point for L = {l}")]
    BracketFailure { l: f64 },

    #[error("initial condition grid is empty")]
    EmptyGrid,

    /// Verification refused because the system is not known to satisfy the
    /// structural hypotheses.
    #[error("verification refused: {0}")]
    NotValidated(String),

    #[error("verification failed: {}", .0.failures.join("; "))]
    VerificationFailure(Box<ConvergenceReport>),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for DuhemError {
    fn from(e: std::io::Error) -> Self {
        DuhemError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for DuhemError {
    fn from(e: serde_json::Error) -> Self {
        DuhemError::Config(e.to_string())
    }
}

impl From<csv::Error> for DuhemError {
    fn from(e: csv::Error) -> Self {
        DuhemError::Io(e.to_string())
    }
}
