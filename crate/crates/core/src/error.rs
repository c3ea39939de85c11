use thiserror::Error;

/// Errors raised by the calculus, the backends and the checkers.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OptError {
    #[error("system mismatch: expected {expected}, found {found}")]
    SystemMismatch { expected: String, found: String },
    #[error("operands belong to different theories")]
    TheoryMismatch,
    #[error("unknown system `{0}`")]
    UnknownSystem(String),
    #[error("unknown event `{0}`")]
    UnknownEvent(String),
    #[error("unknown test `{0}`")]
    UnknownTest(String),
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("not an instrument: {0}")]
    NotAnInstrument(String),
    #[error("backend has no unique deterministic effect")]
    NotCausal,
    #[error("not a deterministic state: {0}")]
    NotDeterministicState(String),
    #[error("partition does not match the outcome set: {0}")]
    PartitionMismatch(String),
    #[error("binary coarse-graining needs at least two outcomes")]
    TooFewOutcomes,
    #[error("weights do not sum to one")]
    WeightsNotNormalized,
    #[error("operational equivalence is undecidable without local tomography")]
    TomographyUnsupported,
    #[error("congruence violation: {0}")]
    CongruenceViolation(String),
    #[error("source theory is already quotiented")]
    SourceIsQuotiented,
    #[error("scalar map left the unit interval at {0}")]
    NonProbabilityOutput(String),
    #[error("axiom prerequisite failed: {0}")]
    AxiomPrereqFailed(String),
    #[error("certificate does not match the fragment: {0}")]
    FragmentMismatch(String),
    #[error("iteration budget of {0} exceeded")]
    BudgetExceeded(usize),
    #[error("model is undefined on test `{0}`")]
    Unmapped(String),
    #[error("invalid rational literal `{0}`")]
    InvalidRational(String),
    #[error("invalid fragment: {0}")]
    InvalidFragment(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
}

pub type Result<T, E = OptError> = std::result::Result<T, E>;
