use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}", path = .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("i/o error: {0}")]
    Stream(#[from] std::io::Error),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("malformed {what}: {detail}")]
    Malformed { what: &'static str, detail: String },

    /// Every endorsement pair fell below the construction threshold.
    #[error("empty graph: no endorsement pair reaches {threshold} endorsements")]
    EmptyGraph { threshold: u64 },

    /// A stage cannot produce a meaningful result from valid input.
    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("unknown user {0:?}")]
    UnknownUser(String),

    #[error("duplicate item {0:?} in ranking")]
    DuplicateItem(String),

    #[error("universe of {size} items exceeds the brute-force limit of {limit}")]
    UniverseTooLarge { size: usize, limit: usize },

    #[error("linear solver stalled with residual {residual:e} after {iterations} iterations")]
    SolverDiverged { residual: f64, iterations: usize },

    #[error("entity extractor unavailable: {0}")]
    Extractor(String),
}

impl Error {
    /// Process exit code: 2 configuration, 3 data, 4 infeasible stage.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) | Error::Config(_) => 2,
            Error::EmptyGraph { .. }
            | Error::Infeasible(_)
            | Error::UniverseTooLarge { .. }
            | Error::SolverDiverged { .. } => 4,
            Error::Io { .. }
            | Error::Stream(_)
            | Error::Malformed { .. }
            | Error::UnknownUser(_)
            | Error::DuplicateItem(_)
            | Error::Extractor(_) => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(what: &'static str, detail: impl ToString) -> Self {
        Error::Malformed {
            what,
            detail: detail.to_string(),
        }
    }
}
