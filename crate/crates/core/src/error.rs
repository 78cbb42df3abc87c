use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("grid frequency {freq_hz} Hz exceeds the Nyquist limit {nyquist_hz} Hz")]
    Nyquist { freq_hz: f64, nyquist_hz: f64 },

    #[error("signal contains a non-finite sample at index {0}")]
    NonFinite(usize),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("spectra are defined on different frequency grids")]
    GridMismatch,

    #[error("count mismatch: {0}")]
    CountMismatch(String),

    #[error("time budget exhausted: {0}")]
    BudgetExhausted(String),

    #[error("corrupt dataset: {0}")]
    Corrupt(String),

    #[error("unsupported dataset format version {found} (expected {expected})")]
    Version { expected: u32, found: u32 },

    #[error("malformed manifest: {0}")]
    Manifest(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Short machine-readable tag used in CLI error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Domain(_) => "domain",
            Error::Nyquist { .. } => "nyquist",
            Error::NonFinite(_) => "non_finite",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::GridMismatch => "grid_mismatch",
            Error::CountMismatch(_) => "count_mismatch",
            Error::BudgetExhausted(_) => "budget_exhausted",
            Error::Corrupt(_) => "corrupt",
            Error::Version { .. } => "version",
            Error::Manifest(_) => "manifest",
            Error::Io(_) => "io",
        }
    }
}
