use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error in {path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("capacity error: requested {requested} negatives but only {available} non-edges are available")]
    Capacity { requested: usize, available: usize },

    #[error("node {node} out of range (graph has {n_nodes} nodes)")]
    Index { node: usize, n_nodes: usize },

    #[error("node {0} has no class label")]
    MissingLabel(usize),

    #[error("degenerate normalizer: Z({0}, {1}) = 0")]
    DegenerateNormalizer(usize, usize),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("training diverged at epoch {epoch} (loss = {loss}); try a smaller learning rate")]
    Training { epoch: usize, loss: f64 },

    #[error("scoring pair ({x}, {y}) failed: {source}")]
    Scorer {
        x: usize,
        y: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("missing artifact {path}: run `{command}` first")]
    Dependency { path: PathBuf, command: &'static str },

    #[error("stale artifact {path}: built from config digest {found}, current config is {expected}")]
    StaleArtifact {
        path: PathBuf,
        expected: String,
        found: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }

    /// Short category tag used by the CLI's error line.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::Dimension(_) => "dimension",
            Error::Config(_) => "config",
            Error::Capacity { .. } => "capacity",
            Error::Index { .. } => "index",
            Error::MissingLabel(_) => "missing-label",
            Error::DegenerateNormalizer(..) => "degenerate-normalizer",
            Error::Numeric(_) => "numeric",
            Error::Training { .. } => "training",
            Error::Scorer { .. } => "scorer",
            Error::Dependency { .. } => "dependency",
            Error::StaleArtifact { .. } => "stale-artifact",
            Error::Io { .. } | Error::Json { .. } | Error::Csv { .. } => "io",
        }
    }
}
