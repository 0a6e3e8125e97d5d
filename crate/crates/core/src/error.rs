use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a documented mathematical precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// The smoothed error is exactly zero, so the inverse of `pi_k` is infinite.
    #[error("estimator diverges at zero error; apply smoothing (alpha > 0) or an explicit floor")]
    Divergent,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(
        "logistic fit did not converge after {iterations} iterations (gradient norm {grad_norm:e})"
    )]
    Fit { iterations: usize, grad_norm: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error at row {row}, column {col}: {msg}")]
    Parse { row: usize, col: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Process exit code: 1 for domain/config failures, 2 for I/O and parse failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Io(_) | Error::Json(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
