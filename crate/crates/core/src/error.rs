use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix of shape {rows}x{cols} is not square")]
    NotSquare { rows: usize, cols: usize },

    #[error("entry count {found} does not match shape {rows}x{cols}")]
    BadShape {
        rows: usize,
        cols: usize,
        found: usize,
    },

    #[error("non-finite matrix entry")]
    NonFinite,

    #[error("vector is not unit-normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("dimension {dim} does not factor as {left}x{right}")]
    NotFactorable {
        dim: usize,
        left: usize,
        right: usize,
    },

    #[error("not a valid density matrix: {0}")]
    InvalidDensity(String),

    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),

    #[error("POVM elements do not commute pairwise (commutator norm {0:e})")]
    NonCommuting(f64),

    #[error("parameter `{name}` = {value} outside {allowed}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        allowed: &'static str,
    },

    #[error("outcome {0} has zero probability")]
    ZeroProbability(usize),

    #[error("probability table is missing entry {0}")]
    MissingEntry(String),

    #[error("invalid probability table: {0}")]
    InvalidTable(String),

    #[error("grid is empty")]
    EmptyGrid,

    #[error("grid is not sorted in ascending order")]
    UnsortedGrid,

    #[error("sample count must be at least 1")]
    NoSamples,

    #[error("eigensolver failed to converge after {0} sweeps")]
    NoConvergence(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
