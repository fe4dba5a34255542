use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("feature index {index} out of range for input of dimension {dim}")]
    InputDimension { index: usize, dim: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{what}: {got} exceeds the supported maximum of {max}")]
    Capacity { what: &'static str, got: usize, max: usize },

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("matrix is not unitary (deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("invalid matrix shape: {0}")]
    Shape(String),

    #[error("labels must contain both classes")]
    DegenerateLabels,

    #[error("invalid label {0}: expected +1 or -1")]
    InvalidLabel(f64),

    #[error("invalid kernel matrix: {0}")]
    InvalidKernel(String),

    #[error("empty input")]
    EmptyInput,

    #[error("malformed chromosome: length {0} is not a positive multiple of 6")]
    MalformedChromosome(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("sampling stalled after {0} rejections")]
    SamplingStall(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
