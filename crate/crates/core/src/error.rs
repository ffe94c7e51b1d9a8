use thiserror::Error;

use crate::box_core::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid box: {0}")]
    InvalidBox(ValidationReport),

    #[error("arity mismatch: {0}")]
    ArityMismatch(String),

    #[error("search budget exceeded: {what} needs {needed}, limit is {limit}")]
    BudgetExceeded {
        what: &'static str,
        needed: u128,
        limit: u128,
    },

    #[error("unknown box kind `{0}`")]
    UnknownKind(String),

    #[error("4q-1 has no real factorization (complex roots)")]
    NoRealFactorization,

    #[error("no scaling keeps every affine factor inside [-1, 1] on [0, 1] (needs {needed:.6}, max 1)")]
    RangeInfeasible { needed: f64 },

    #[error("constructed box is not a valid no-signalling box at delta = {delta}: {report}")]
    InvalidConstructedBox {
        delta: f64,
        report: ValidationReport,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.into())
    }
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
