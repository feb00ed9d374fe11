use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the formula being evaluated.
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    /// No exponent triple satisfies the requested constraints.
    #[error("infeasible exponent selection: {0}")]
    Infeasible(String),

    #[error("invalid grid: {0}")]
    Grid(String),

    /// The signal dropped below the configured floor; `u/v` is not evaluable.
    #[error("signal v reached {min_v:e} below floor {floor:e}")]
    Singular { min_v: f64, floor: f64 },

    /// A step kept violating positivity after the retry budget was spent.
    #[error("step failed at t = {t}: {reason}")]
    StepFailed { t: f64, reason: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            op,
            detail: detail.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
