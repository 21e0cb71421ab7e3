use thiserror::Error;

/// Broad class of a failure, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Io,
    NonConvergence,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}", format_rows(.0))]
    Rows(Vec<RowDiagnostic>),

    #[error("malformed CSV: {0}")]
    Csv(String),

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{0}")]
    Invalid(String),

    #[error("model diverges: {0}")]
    Divergence(String),

    #[error("search did not converge: {0}")]
    NonConvergence(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io(_) => ErrorKind::Io,
            Error::Divergence(_) | Error::NonConvergence(_) => ErrorKind::NonConvergence,
            _ => ErrorKind::Validation,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}

/// One problem found in a tabular input; `row` counts the header as row 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowDiagnostic {
    pub row: usize,
    pub message: String,
}

impl RowDiagnostic {
    pub(crate) fn new(row: usize, message: impl Into<String>) -> Self {
        Self {
            row,
            message: message.into(),
        }
    }
}

fn format_rows(rows: &[RowDiagnostic]) -> String {
    rows.iter()
        .map(|d| format!("row {}: {}", d.row, d.message))
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
