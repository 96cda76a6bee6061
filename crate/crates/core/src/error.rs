use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,
    #[error("rational function has a pole at the evaluation point")]
    PoleAtPoint,
    #[error("objects live on different charts")]
    ChartMismatch,
    #[error("degree mismatch: {0}")]
    DegreeMismatch(String),
    #[error("invalid chart: {0}")]
    InvalidChart(String),
    #[error("affine map is singular")]
    SingularMap,
    #[error("order {order} is invalid: {reason}")]
    InvalidOrder { order: usize, reason: String },
    #[error("subordinate structure needs k <= n - 2 (n = {order}, k = {k})")]
    OrderTooSmall { order: usize, k: usize },
    #[error("spanning vectors are linearly dependent")]
    DependentSpan,
    #[error("submanifold constraints are inconsistent or dependent")]
    InvalidSubmanifold,
    #[error("function has a pole along the whole submanifold")]
    PoleOnSubmanifold,
    #[error("image of the sharp map does not have constant rank along N: {0}")]
    NonConstantRank(String),
    #[error("subbundle containment violated: {0}")]
    Precondition(String),
    #[error("reduction hypotheses failed: {0}")]
    HypothesesFailed(String),
    #[error("chart is not adapted to (N, E): {0}")]
    NotAdapted(String),
    #[error("reduced tensor fails the fundamental identity (internal inconsistency)")]
    FiRefutedOnQuotient,
    #[error("reduction is internally inconsistent: {0}")]
    ReductionInconsistent(String),
    #[error("form is not closed")]
    NotClosed,
    #[error("Id + B~ o sharp is singular everywhere")]
    SingularEverywhere,
    #[error("transported sharp map is not skew-symmetric (internal inconsistency)")]
    SkewSymmetryViolated,
}
