use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

/// Errors shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A closed form or kernel was evaluated outside the region where it is defined.
    #[error("domain error in {function}: {detail}")]
    Domain {
        function: &'static str,
        detail: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A coordinate dropped below the tenability guard after an event.
    #[error("tenability breach: coordinate {coordinate} became {value}")]
    TenabilityBreach { coordinate: usize, value: f64 },

    /// The coordinate sum (the master clock rate) was not positive.
    #[error("rate underflow: coordinate sum {sum} is not positive")]
    RateUnderflow { sum: f64 },

    #[error("trajectory {index} failed after {events} events: {source}")]
    Trajectory {
        index: u64,
        events: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("{failed} of {total} trajectories failed; first: {first}")]
    Ensemble {
        failed: usize,
        total: u64,
        first: Box<Error>,
    },

    #[error("insufficient samples: got {got}, need {need}")]
    InsufficientSamples { got: u64, need: u64 },

    #[error("no limit law is known for scheme {0}")]
    NoLimitSpec(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("configuration invalid: {}", .0.join("; "))]
    Validation(Vec<String>),
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(function: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            function,
            detail: detail.into(),
        }
    }
}
