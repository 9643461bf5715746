use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found} ({context})")]
    DimensionMismatch {
        expected: usize,
        found: usize,
        context: String,
    },

    #[error("non-finite entry at sample {sample}, position ({row}, {col})")]
    NonFinite {
        sample: usize,
        row: usize,
        col: usize,
    },

    #[error("matrix {sample} is not symmetric at ({row}, {col}): |{a} - {b}| exceeds {tol:e}")]
    Asymmetric {
        sample: usize,
        row: usize,
        col: usize,
        a: f64,
        b: f64,
        tol: f64,
    },

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("parse error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse {
        line: Option<usize>,
        message: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("link {link} has zero variance in both groups but a mean difference of {diff}")]
    DegenerateWithDifference { link: usize, diff: f64 },

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("replication {index} failed: {source}")]
    Replication {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn parse(line: Option<usize>, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidArgument(message.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures that indicate a bug rather than bad input.
    pub fn is_internal(&self) -> bool {
        match self {
            Error::Invariant(_) => true,
            Error::Replication { source, .. } => source.is_internal(),
            _ => false,
        }
    }
}
