use thiserror::Error;

/// Errors raised anywhere in the estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("input error: {0}")]
    Input(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("grid error: {0}")]
    Grid(String),

    #[error("solver error: {0}")]
    Solver(String),

    #[error("stability error: Courant number {courant:.6} exceeds 1")]
    Stability { courant: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("training error at iteration {iteration}: {message}")]
    Training { iteration: usize, message: String },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
