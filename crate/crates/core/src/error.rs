use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid dataset: {}", .0.join("; "))]
    InvalidDataset(Vec<String>),

    #[error("singular local fit at (s={s}, t={t}): smallest pivot {pivot:e}")]
    SingularFit { s: f64, t: f64, pivot: f64 },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
