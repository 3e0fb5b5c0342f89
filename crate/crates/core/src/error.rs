use std::io;

use thiserror::Error;

use crate::matrix::JournalId;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure class, used by the command line to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad input data, violated preconditions, I/O.
    Data,
    /// A numerical routine failed (non-convergence, ill-conditioning).
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: duplicate edge {cited} -> {citing}")]
    DuplicateEdge {
        line: usize,
        cited: JournalId,
        citing: JournalId,
    },

    #[error("{0}")]
    Domain(String),

    #[error("edge list contains no citation records")]
    EmptyCorpus,

    #[error("not found: {0}")]
    NotFound(String),

    #[error("empty selection: {0}")]
    EmptySelection(String),

    #[error("zero-variance variables: {}", fmt_ids(.0))]
    DegenerateVariables(Vec<JournalId>),

    #[error("degenerate subset: {0}")]
    DegenerateSubset(String),

    #[error("degenerate environment: only the seed journal {0} passes the threshold")]
    DegenerateEnvironment(JournalId),

    #[error("graph is empty after thresholding")]
    EmptyGraph,

    #[error("eigensolver did not converge (residual {residual:e})")]
    NoConvergence { residual: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("config: {0}")]
    Config(String),

    #[error("stage `{stage}`: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::NoConvergence { .. } | Error::Numerical(_) => ErrorKind::Numerical,
            Error::Stage { source, .. } => source.kind(),
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

fn fmt_ids(ids: &[JournalId]) -> String {
    let shown: Vec<String> = ids.iter().take(20).map(|id| id.to_string()).collect();
    if ids.len() > 20 {
        format!("{} (+{} more)", shown.join(", "), ids.len() - 20)
    } else {
        shown.join(", ")
    }
}
