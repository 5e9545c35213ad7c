use thiserror::Error;

/// Errors raised by hypergraph construction, analysis and training.
#[derive(Debug, Error)]
pub enum HgxError {
    #[error("duplicate incidence ({vertex}, {edge})")]
    DuplicateIncidence { vertex: String, edge: String },

    #[error("non-positive {what} for {at}: {value}")]
    NonPositive {
        what: &'static str,
        at: String,
        value: f64,
    },

    #[error("hyperedge {0} has no members")]
    EmptyEdge(String),

    #[error("hyperedge {0} has no weight and defaults are disabled")]
    MissingEdgeWeight(String),

    #[error("unknown vertex {0}")]
    UnknownVertex(String),

    #[error("unknown hyperedge {0}")]
    UnknownEdge(String),

    #[error("duplicate identifier {0}")]
    DuplicateId(String),

    #[error("rho({x}) = {value} is not finite and positive")]
    InvalidRho { x: f64, value: f64 },

    #[error("custom rho table has no entry for degree {0}")]
    RhoTableMiss(f64),

    #[error("vertex {0} is isolated")]
    IsolatedVertex(String),

    #[error("degenerate hyperedge {edge}: vertex {vertex} carries the entire second-step mass")]
    DegenerateEdge { edge: String, vertex: String },

    #[error("hypergraph is not connected")]
    Disconnected,

    #[error("equivalence conditions do not hold: {0}")]
    ConditionNotMet(String),

    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("distribution is not stationary (residual {0:e})")]
    NotStationary(f64),

    #[error("stationary distribution has a zero entry at vertex {0}")]
    ZeroProbability(usize),

    #[error("matrix is not symmetric (max deviation {0:e})")]
    Asymmetric(f64),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("dense operations are limited to {limit} vertices, got {n}")]
    TooLarge { n: usize, limit: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl HgxError {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            HgxError::NotConverged { .. }
            | HgxError::NotStationary(_)
            | HgxError::NonFiniteLoss { .. }
            | HgxError::Asymmetric(_)
            | HgxError::InvalidRho { .. } => 2,
            HgxError::Io(_) | HgxError::Json(_) | HgxError::Csv(_) | HgxError::Parse(_) => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, HgxError>;
