use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("invalid window spec: {0}")]
    InvalidSpec(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A window row has zero variance, so its autocorrelation is undefined.
    #[error(
        "degenerate window at start index {start_index}: variable {variable} has zero variance"
    )]
    DegenerateWindow { variable: usize, start_index: usize },

    #[error("degenerate cluster {cluster}: total membership weight vanished")]
    DegenerateCluster { cluster: usize },

    #[error("degenerate partition: subsequence {index} has no membership mass")]
    DegeneratePartition { index: usize },

    #[error("confidence index undefined: {0}")]
    UndefinedIndex(String),

    #[error("injection error: {0}")]
    Injection(String),

    #[error("no admissible neighbor for subsequence {index} with exclusion {exclusion}")]
    NoNeighbor { index: usize, exclusion: usize },

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// The innermost error, with pipeline stage wrappers removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    /// Short machine-readable tag used by the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self.root() {
            Error::InvalidSeries(_) => "invalid-series",
            Error::InvalidSpec(_) => "invalid-spec",
            Error::InvalidConfig(_) => "invalid-config",
            Error::DimensionMismatch(_) => "dimension-mismatch",
            Error::DegenerateWindow { .. } => "degenerate-window",
            Error::DegenerateCluster { .. } => "degenerate-cluster",
            Error::DegeneratePartition { .. } => "degenerate-partition",
            Error::UndefinedIndex(_) => "undefined-index",
            Error::Injection(_) => "injection",
            Error::NoNeighbor { .. } => "no-neighbor",
            Error::Parse { .. } => "parse",
            Error::Io { .. } => "io",
            Error::Stage { .. } => unreachable!("root() strips stage wrappers"),
        }
    }
}
