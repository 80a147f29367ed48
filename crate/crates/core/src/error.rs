use thiserror::Error;

/// Errors surfaced by every module of the crate.
///
/// [`Error::code`] gives the module-qualified code the CLI prints on failure.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),
    #[error("no closed-form probability of {set} under {law}")]
    UnsupportedSetForLaw { law: String, set: String },
    #[error("scenario is not enumerable: {0}")]
    NotEnumerable(String),
    #[error("index {index} exceeds path horizon {horizon}")]
    IndexOutOfHorizon { index: u64, horizon: usize },
    #[error("index {needed} is beyond the available horizon {horizon}")]
    HorizonExceeded { needed: u64, horizon: usize },
    #[error("combined support has {size} points, the limit is {limit}")]
    SupportTooLarge { size: usize, limit: usize },
    #[error("inclusion violated with all premises holding: {0}")]
    TheoremViolation(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{} validation error(s): {}", .0.len(), .0.join("; "))]
    Validation(Vec<String>),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::DomainMismatch(_) => "metric_space::DomainMismatch",
            Error::UnsupportedSetForLaw { .. } => "distributions::UnsupportedSetForLaw",
            Error::NotEnumerable(_) => "processes::NotEnumerable",
            Error::IndexOutOfHorizon { .. } => "processes::IndexOutOfHorizon",
            Error::HorizonExceeded { .. } => "oracle::HorizonExceeded",
            Error::SupportTooLarge { .. } => "oracle::SupportTooLarge",
            Error::TheoremViolation(_) => "oracle::TheoremViolation",
            Error::InvalidParameter(_) => "config::InvalidParameter",
            Error::Parse(_) => "cli::ParseError",
            Error::Validation(_) => "cli::ValidationError",
            Error::Io(_) => "cli::Io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
