use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid degree k={k} for layer width m={m} (require {min} <= k <= m)")]
    InvalidDegree { k: usize, m: usize, min: usize },

    #[error("construction `{0}` is randomized and requires a seed")]
    MissingSeed(&'static str),

    #[error("dimension mismatch: {context} (expected {expected}, got {got})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("matrix is not symmetric within tolerance at ({row},{col})")]
    NotSymmetric { row: usize, col: usize },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("class {class} has only {available} samples, {requested} requested")]
    ClassTooSmall {
        class: usize,
        available: usize,
        requested: usize,
    },

    #[error("bad magic number {got:#010x} in {path} (expected {expected:#010x})")]
    BadMagic {
        path: String,
        got: u32,
        expected: u32,
    },

    #[error("{path}: {message}")]
    Malformed { path: String, message: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
