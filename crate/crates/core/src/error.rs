use thiserror::Error;

/// Crate-wide error type.
///
/// Variants are grouped by how the CLI maps them onto process exit codes:
/// usage problems exit 1, data problems exit 2, numerical problems exit 3.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed command line or configuration value.
    #[error("usage error: {0}")]
    Usage(String),

    /// A function argument violates its documented contract.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Requested dimension is outside the supported range.
    #[error("unsupported dimension: {0}")]
    UnsupportedDimension(String),

    /// Input data is structurally valid but statistically unusable
    /// (constant fitness, too few distinct points, ...).
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    /// A matrix involved in a decomposition or regression does not have
    /// the rank the operation requires.
    #[error("rank deficiency: {0}")]
    RankDeficient(String),

    /// An iterative numerical procedure failed to converge or produced
    /// non-finite values.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Column names or file layout do not match the feature schema.
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    /// File content could not be parsed as the expected artifact.
    #[error("malformed input: {0}")]
    MalformedInput(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for this error: 1 usage, 2 data, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            Error::InvalidArgument(_)
            | Error::UnsupportedDimension(_)
            | Error::SchemaMismatch(_)
            | Error::MalformedInput(_)
            | Error::Io(_)
            | Error::Csv(_)
            | Error::Json(_) => 2,
            Error::DegenerateSample(_) | Error::RankDeficient(_) | Error::Numerical(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
