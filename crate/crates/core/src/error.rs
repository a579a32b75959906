use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("empty or inverted window [{from}, {to}] for a series of length {n}")]
    EmptyWindow { from: usize, to: usize, n: usize },

    #[error("window ({l}, {r}] too short: need at least {min} observations")]
    WindowTooShort { l: usize, r: usize, min: usize },

    #[error("argument {value} outside [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("candidate {candidate}: window of {window} observations is too short for block length {block_len}")]
    BlockTooLong {
        candidate: usize,
        window: usize,
        block_len: usize,
    },

    #[error("candidate {candidate}: degenerate window of {window} observations")]
    DegenerateWindow { candidate: usize, window: usize },

    #[error("candidate index {0} out of range")]
    NoSuchCandidate(usize),

    #[error("too few observations: got {got}, need at least {min}")]
    TooFewObservations { got: usize, min: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown {kind} '{name}'")]
    Unknown { kind: &'static str, name: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}
