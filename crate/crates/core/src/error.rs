use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Two operands of a tensor product share a factor label.
    #[error("cannot compose layouts: label `{0}` appears in both operands")]
    Composition(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("numerical consistency violated: {0}")]
    Numerical(String),

    #[error("unsupported scenario: {0}")]
    UnsupportedScenario(String),

    #[error("total dimension {dimension} exceeds the configured cap of {cap}")]
    Capacity { dimension: usize, cap: usize },

    #[error("cannot sample from an all-zero outcome distribution")]
    DegenerateDistribution,

    /// Amplitudes do not have unit norm. Carries the offending squared norm.
    #[error("amplitudes are not normalized: sum of |a_i|^2 = {0}")]
    Normalization(f64),

    /// Schedule steps overlap, run backwards, or reference an unknown observer.
    #[error("invalid schedule at step {step}: {reason}")]
    Schedule { step: usize, reason: String },

    #[error("invalid scenario: {0}")]
    Scenario(String),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}
