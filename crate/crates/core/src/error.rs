use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("unknown vertex id: {0}")]
    UnknownVertex(String),

    #[error("vertex set must be nonempty")]
    EmptyVertexSet(),

    #[error("vertices {0} and {1} lie in different components")]
    Disconnected(String, String),

    #[error("graph must be connected for this operation")]
    NotConnected,

    #[error("exponent p must lie in (1, inf), got {0}")]
    BadExponent(f64),

    #[error("{0} must be strictly positive everywhere (violated at {1})")]
    NotStrictlyPositive(&'static str, String),

    #[error("function must be a supersolution for this operation (min residual {0})")]
    NotSupersolution(f64),

    #[error("instance is critical: {0}")]
    CriticalInstance(String),

    #[error("instance is subcritical but a critical one is required (lambda0 = {0})")]
    SubcriticalInstance(f64),

    #[error("invalid contraction: {0}")]
    InvalidContraction(String),

    #[error("invalid exhaustion plan: {0}")]
    InvalidPlan(String),

    #[error("invalid family spec: {0}")]
    InvalidFamilySpec(String),

    #[error("linear system is singular")]
    SingularSystem,

    #[error("solver did not converge: {0}")]
    NoConvergence(String),

    #[error("subset enumeration bound exceeded: {0}")]
    EnumerationBound(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
