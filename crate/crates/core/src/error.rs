use thiserror::Error;

pub type Result<T> = std::result::Result<T, QuackError>;

#[derive(Debug, Error)]
pub enum QuackError {
    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("insufficient data: need at least {required} snapshots, got {got}")]
    InsufficientData { required: usize, got: usize },

    #[error("unsupported shape: {0}")]
    UnsupportedShape(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("degenerate baseline: initial loss {l_init} does not exceed minimum loss {l_min}")]
    DegenerateBaseline { l_init: f64, l_min: f64 },

    #[error("unknown method: {0}")]
    UnknownMethod(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl QuackError {
    pub(crate) fn dim(what: &'static str, expected: usize, got: usize) -> Self {
        QuackError::Dimension {
            what,
            expected,
            got,
        }
    }
}
