use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("rank mismatch: {left} vs {right}")]
    RankMismatch { left: usize, right: usize },

    #[error("step distribution mismatch between actions")]
    MeasureMismatch,

    #[error("word `{0}` is not available on this action")]
    UnsupportedWord(String),

    #[error("action failed validation: {0}")]
    Validation(String),

    #[error("exact enumeration needs {needed} assignments, budget is {budget}")]
    Budget { needed: u128, budget: u64 },

    #[error("resolution too coarse: {0}")]
    Resolution(String),

    #[error(
        "fixed-point solve did not converge (residual {residual:e} after {iterations} iterations)"
    )]
    Solver { residual: f64, iterations: usize },

    #[error("target {target} outside achievable range [0, {max}]")]
    Range { target: f64, max: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) => 1,
            Error::Budget { .. } | Error::Resolution(_) => 2,
            _ => 3,
        }
    }
}
