use thiserror::Error;

/// Errors raised by formation construction, analysis and simulation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormationError {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid framework: {0}")]
    InvalidFramework(String),

    #[error("dimension {0} is not supported (expected 2 or 3)")]
    UnsupportedDimension(usize),

    #[error("{n} agents are too few for rigidity tests in R^{dim}")]
    TooFewAgents { n: usize, dim: usize },

    #[error("invalid construction trace: {0}")]
    InvalidTrace(String),

    #[error("non-regular embedding: {0}")]
    NonRegularEmbedding(String),

    #[error("invalid disturbance: {0}")]
    InvalidDisturbance(String),

    #[error("disturbance cannot be represented by the internal model: {0}")]
    UnrepresentableDisturbance(String),

    #[error("invalid controller configuration: {0}")]
    InvalidController(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("eigenvalue iteration did not converge")]
    EigenNoConvergence,

    #[error("framework is not at its target shape (max |e_k| = {0:e})")]
    NotAtTarget(f64),

    #[error("assignment rule does not apply: {0}")]
    RuleMismatch(String),

    #[error("simulation diverged at t = {t}: {reason}")]
    Diverged { t: f64, reason: String },

    #[error("analysis window holds {got} samples, need at least {need}")]
    WindowTooShort { got: usize, need: usize },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("generation failed: {0}")]
    GenerationFailed(String),
}

pub type Result<T, E = FormationError> = std::result::Result<T, E>;
