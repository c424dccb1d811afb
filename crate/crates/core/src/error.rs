use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("site {site} is outside 1..={n}")]
    SiteOutOfRange { site: usize, n: usize },

    #[error("site {0} appears more than once")]
    DuplicateSite(usize),

    #[error("encoding norm {norm} deviates from 1 by more than {tolerance:e}")]
    NotNormalized { norm: f64, tolerance: f64 },

    #[error("chain of {n} sites is too short: {needed} sites required")]
    ChainTooShort { needed: usize, n: usize },

    #[error("region size {r} must lie in 1..={n}")]
    RegionOutOfRange { r: usize, n: usize },

    #[error("dense oracle refuses N = {n} (limit {limit})")]
    OracleTooLarge { n: usize, limit: usize },

    #[error("parity violation in reduced amplitude (s={s}, j={j}, t={t}): discarded component {discarded:e}")]
    ParityViolation { s: usize, j: usize, t: f64, discarded: f64 },

    #[error("numerical check failed: {0}")]
    Numerical(String),

    #[error("empty time window [{lo}, {hi}]")]
    EmptyWindow { lo: f64, hi: f64 },

    #[error("encoding support at site {site} lies outside the region 1..={r}")]
    SupportMismatch { site: usize, r: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("grid point {index} ({coords}): {source}")]
    Sweep {
        index: usize,
        coords: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ParityViolation { .. } | Error::Numerical(_) => 3,
            Error::Io(_) => 4,
            Error::Sweep { source, .. } => source.exit_code(),
            _ => 2,
        }
    }
}
