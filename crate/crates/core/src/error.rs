use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("no irreducible polynomial configured for GF(2^{0})")]
    UnsupportedDegree(u32),

    #[error("invalid Kerdock set for m = {m}: {reason}")]
    InvalidKerdockSet { m: u32, reason: String },

    #[error("binary matrix is singular")]
    Singular,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("m = {m} is too large for {what} (limit {limit})")]
    TooLarge { what: &'static str, m: u32, limit: u32 },

    #[error("query column {0} is identically zero (degenerate on-off signature)")]
    DegenerateSignature(usize),

    #[error("coherence undefined: {0}")]
    Coherence(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("detection rate undefined: no trial has any neighbour")]
    UndefinedRate,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("malformed matrix file: {0}")]
    Format(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv { path: path.into(), source }
    }
}
