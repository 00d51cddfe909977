use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("control value {value} is outside the tabulated domain [{low}, {high}]")]
    OutOfDomain { value: f64, low: f64, high: f64 },

    #[error("invalid efficiency curve `{spec}`: {reason}")]
    InvalidCurve { spec: String, reason: String },

    #[error("invalid value for {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("no signal: both detector efficiencies vanish at every grid point")]
    NoSignal,

    #[error("undefined {0}: denominator is zero")]
    Undefined(&'static str),

    #[error("pulses tagged {first:?} and {second:?} would interfere in detection slot {slot}")]
    MixedTags {
        slot: i64,
        first: crate::detmodel::ControlTag,
        second: crate::detmodel::ControlTag,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("infeasible target: {0}")]
    Infeasible(String),

    #[error("{path}: {message}")]
    Config { path: String, message: String },

    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
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
