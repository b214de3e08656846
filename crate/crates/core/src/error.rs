use alloc::boxed::Box;
use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("step too large: geodesic distance {distance:.3e} exceeds limit {limit:.3e}")]
    StepTooLarge { distance: f64, limit: f64 },
    #[error("accuracy error: {what} (estimate {estimate:.3e})")]
    Accuracy { what: String, estimate: f64 },
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error("degenerate system: {0}")]
    Degenerate(String),
    #[error("integrator failed on interval {interval}; refine the grid ({source})")]
    Integrator {
        interval: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("bridge failure: {0}")]
    BridgeFailure(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn accuracy(what: impl Into<String>, estimate: f64) -> Self {
        Error::Accuracy {
            what: what.into(),
            estimate,
        }
    }
}
