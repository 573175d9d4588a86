use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    Model(String),

    #[error("index {index} out of range (expected < {bound})")]
    IndexOutOfRange { index: usize, bound: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("matrix is not positive Hermitian: {0}")]
    NotPositiveHermitian(String),

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite value encountered at t = {t}")]
    NonFinite { t: f64 },

    #[error("blow-up detected: norm {norm:e} exceeded ceiling {ceiling:e} after t = {last_good_time}")]
    BlowUp {
        last_good_time: f64,
        norm: f64,
        ceiling: f64,
    },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("not enough samples in fit window: {got} (need at least {need})")]
    InsufficientSamples { got: usize, need: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
