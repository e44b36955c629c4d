use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Hierarchy shapes that cannot be compared or combined.
    #[error("structural error: {0}")]
    Structural(String),

    #[error("malformed trace: {0}")]
    MalformedTrace(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Pretraining of the blocking cue stopped short of the required strength.
    #[error("insufficient pretraining: V_A reached {achieved:.6} but {required:.6} is required")]
    InsufficientPretraining { achieved: f64, required: f64 },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("illegal action: {0}")]
    IllegalAction(String),

    #[error("training diverged at update {update}: {reason}")]
    Divergence { update: usize, reason: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("unknown agent kind: {0}")]
    UnknownAgent(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}
