use thiserror::Error;

pub type Result<T> = std::result::Result<T, SrwError>;

#[derive(Debug, Error)]
pub enum SrwError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The instance has no destinations or no no-link nodes; callers usually skip it.
    #[error("untrainable instance for seed {seed}: {reason}")]
    Untrainable { seed: usize, reason: String },

    #[error("degenerate instance: {0}")]
    Degenerate(String),

    #[error(
        "power iteration did not converge after {iterations} sweeps (last change {last_change:e})"
    )]
    NonConvergence {
        iterations: usize,
        last_change: f64,
        last_iterate: Vec<f64>,
    },

    #[error("unsupported loss for this evaluation path: {0}")]
    UnsupportedLoss(String),

    #[error("optimization failed: {reason}")]
    Optimization { reason: String, best: Vec<f64> },

    #[error("generation failed: {0}")]
    Generation(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("instance {index}: {source}")]
    InInstance {
        index: usize,
        #[source]
        source: Box<SrwError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl SrwError {
    pub(crate) fn in_instance(self, index: usize) -> Self {
        SrwError::InInstance {
            index,
            source: Box::new(self),
        }
    }

    pub fn is_untrainable(&self) -> bool {
        matches!(self, SrwError::Untrainable { .. })
    }
}
