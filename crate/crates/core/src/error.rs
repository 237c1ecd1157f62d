use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("probability {0} outside the open interval (0, 1)")]
    Domain(f64),

    #[error("column `{0}` is constant and cannot be standardized")]
    DegenerateColumn(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("k-max {kmax} out of range (allowed 1..={limit})")]
    KmaxOutOfRange { kmax: usize, limit: usize },

    #[error("model size {k} out of range for pool size {m}")]
    SizeOutOfRange { k: usize, m: usize },

    #[error("selected columns are linearly dependent")]
    Singular,

    #[error("insufficient degrees of freedom: n = {n}, parameters = {params}")]
    InsufficientDf { n: usize, params: usize },

    #[error("penalty family {0} has no per-step critical constant")]
    UnsupportedFamily(String),

    #[error("invalid penalty specification: {0}")]
    InvalidPenalty(String),

    #[error("invalid simulation configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("non-numeric cell `{value}` at row {row}, column `{column}`")]
    NonNumeric { row: usize, column: String, value: String },

    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("nothing to summarize: {0}")]
    Empty(String),
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, err: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            message: err.to_string(),
        }
    }
}
