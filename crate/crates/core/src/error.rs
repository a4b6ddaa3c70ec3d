use thiserror::Error;

/// Errors produced by the multiscale training library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid node selection: {0}")]
    InvalidSelection(String),

    #[error("graph power p must be at least 1")]
    ZeroPower,

    #[error("graph power {power} would produce {edges} edges, above the budget of {budget}")]
    EdgeBudgetExceeded { power: usize, edges: usize, budget: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("empty mask: {0}")]
    EmptyMask(&'static str),

    #[error("missing node coordinates")]
    MissingCoordinates,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("coarsening level {level}: no training nodes after {retries} attempts")]
    CoarseningFailed { level: usize, retries: usize },

    #[error("loss became non-finite at level {level}, epoch {epoch}")]
    Diverged { level: usize, epoch: usize },

    #[error("tape does not match model: {0}")]
    TapeMismatch(String),

    #[error("loss ratio undefined for a zero fine-scale loss")]
    ZeroFineLoss,

    #[error("sampler exhausted: {0}")]
    SamplerExhausted(String),

    #[error("least squares design is rank deficient (pivot {pivot:e})")]
    RankDeficient { pivot: f64 },

    #[error("rod placement failed after {0} attempts")]
    RodPlacement(usize),

    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
