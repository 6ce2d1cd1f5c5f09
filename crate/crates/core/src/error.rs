use std::path::PathBuf;

/// Every failure the toolkit can report.
///
/// Variants are grouped into families (see [`ErrorFamily`]) so command-line
/// front ends can map them onto stable exit codes.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON in {context}: {message}")]
    Json { context: String, message: String },
    #[error("malformed CSV: {0}")]
    Csv(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("missing column `{column}` in CSV header")]
    MissingColumn { column: String },
    #[error("row {row}: value `{value}` is outside the domain of column `{column}`")]
    OutOfDomainValue {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}: label `{value}` is not 0 or 1")]
    BadLabel { row: usize, value: String },
    #[error("invalid row: {0}")]
    InvalidRow(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("column `{column}` has fewer than two distinct values")]
    DegenerateColumn { column: String },
    #[error("training data contains a single class")]
    SingleClassDataset,
    #[error(
        "surrogate boundary cannot be learned: {class0} samples of class 0 and {class1} of class 1 survive the confidence filter"
    )]
    BoundaryUnlearnable { class0: usize, class1: usize },
    #[error("degenerate boundary: {0}")]
    DegenerateBoundary(String),
    #[error("scores cover a single class; AUC is undefined")]
    OneClassSample,
    #[error("iterative probe did not cross the boundary within {iters} steps")]
    NoConvergence { iters: usize },

    #[error("empty sample")]
    EmptySample,
    #[error("constant column: correlation is undefined")]
    ConstantColumn,
    #[error("elapsed time must be positive")]
    ZeroElapsed,
    #[error("group `{group}` is empty")]
    EmptyGroup { group: String },
    #[error("group `{group}` has no {missing} ground-truth labels; the rate is undefined")]
    UndefinedRate { group: String, missing: String },
    #[error("need {needed} unique discriminatory instances, only {available} available")]
    InsufficientInstances { needed: usize, available: usize },

    #[error("bridge failure: {0}")]
    BridgeFailure(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse grouping of [`Error`] variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorFamily {
    Config,
    Io,
    Data,
    Method,
    Metric,
    Bridge,
}

impl ErrorFamily {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorFamily::Config => 2,
            ErrorFamily::Io => 3,
            ErrorFamily::Data => 4,
            ErrorFamily::Method => 5,
            ErrorFamily::Metric => 6,
            ErrorFamily::Bridge => 7,
        }
    }
}

impl Error {
    pub fn family(&self) -> ErrorFamily {
        use Error::*;
        match self {
            InvalidConfig(_) => ErrorFamily::Config,
            Io { .. } | Json { .. } | Csv(_) => ErrorFamily::Io,
            InvalidSchema(_)
            | MissingColumn { .. }
            | OutOfDomainValue { .. }
            | BadLabel { .. }
            | InvalidRow(_)
            | DimensionMismatch { .. } => ErrorFamily::Data,
            DegenerateColumn { .. }
            | SingleClassDataset
            | BoundaryUnlearnable { .. }
            | DegenerateBoundary(_)
            | OneClassSample
            | NoConvergence { .. }
            | InsufficientInstances { .. } => ErrorFamily::Method,
            EmptySample
            | ConstantColumn
            | ZeroElapsed
            | EmptyGroup { .. }
            | UndefinedRate { .. } => ErrorFamily::Metric,
            BridgeFailure(_) => ErrorFamily::Bridge,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(context: impl Into<String>, err: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            message: err.to_string(),
        }
    }
}
