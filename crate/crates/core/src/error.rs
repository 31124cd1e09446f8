use thiserror::Error;

/// Errors produced by the tableau, metric, optimization and integration routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum RkError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate family: {0}")]
    DegenerateFamily(String),

    #[error("singular family: {0}")]
    SingularFamily(String),

    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),

    #[error("no error estimator: the order-4 difference space is empty")]
    NoErrorEstimator,

    #[error("unknown builtin pair `{0}`")]
    UnknownBuiltin(String),

    #[error("unknown problem `{0}`")]
    UnknownProblem(String),

    #[error("problem `{0}` is unavailable: its definition is not given in text form")]
    UnavailableProblem(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("pair has no interpolant")]
    NoInterpolant,

    #[error("right-hand side returned a non-finite value at t = {t}, stage {stage}")]
    NonFiniteRhs { t: f64, stage: usize },

    #[error("step limit of {0} attempts exceeded")]
    StepLimit(usize),

    #[error("step size {h:e} fell below h_min at t = {t}")]
    StepTooSmall { t: f64, h: f64 },

    #[error("t = {t} lies outside the solved window [{t0}, {t1}]")]
    OutsideWindow { t: f64, t0: f64, t1: f64 },

    #[error("empty plotting window")]
    EmptyWindow,

    #[error("no feasible point found within the evaluation budget")]
    NoFeasiblePoint,
}

pub type Result<T> = std::result::Result<T, RkError>;
