use thiserror::Error;

/// Errors raised anywhere in the detection pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed scenario: {0}")]
    Parse(String),

    #[error("invalid value for `{key}`: {reason}")]
    Validation { key: String, reason: String },

    #[error("matrix is numerically singular (condition estimate {condition:e})")]
    SingularMatrix { condition: f64 },

    #[error("exhaustive search over {users} users exceeds the cap of {cap}")]
    KTooLarge { users: usize, cap: usize },

    #[error("chip code {code} does not fit in {bits} bits")]
    CodeOutOfRange { code: u32, bits: u32 },

    #[error("delay {delay} outside [0, {processing_gain})")]
    DelayOutOfRange {
        delay: usize,
        processing_gain: usize,
    },

    #[error("hypothesis enumeration needs {required} waveforms, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("register has no members")]
    EmptyRegister,

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("operator E3 is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),

    #[error("unknown sweep parameter `{0}`")]
    UnknownParameter(String),

    #[error("trial {index}: {source}")]
    Trial {
        index: u64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn validation(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            key: key.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by the user-supplied configuration rather than by
    /// the run itself.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Parse(_) | Error::Validation { .. } | Error::UnknownParameter(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
