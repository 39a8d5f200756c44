use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("division by a jet with zero constant term")]
    DivisionByZeroJet,
    #[error("square root of a jet with non-positive constant term {0}")]
    NegativeSqrtJet(f64),
    #[error("requested derivative order {requested} exceeds the available order {available}")]
    OrderExceeded { requested: usize, available: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown variable `{name}` at position {pos}")]
    UnknownVariable { name: String, pos: usize },
    #[error("wrong number of arguments at position {pos}: {msg}")]
    Arity { pos: usize, msg: String },

    #[error("direction {0:?} is zero or lies on an excluded ray of the norm")]
    SingularDirection(Vec<f64>),
    #[error("ambient frame is not invertible")]
    NonInvertibleFrame,
    #[error("fundamental tensor is not positive definite (min eigenvalue {min_eigenvalue:e}, condition {condition:e})")]
    NonPDTensor { min_eigenvalue: f64, condition: f64 },
    #[error("normal block zeta is not positive definite (min eigenvalue {0:e})")]
    NonPDZeta(f64),
    #[error("finite-difference step {0:e} underflows")]
    StepUnderflow(f64),

    #[error("pencil is identically zero")]
    ZeroPencil,
    #[error("no invertible member found in the pencil")]
    SingularA2,
    #[error("pencil is not semisimple near eigenvalue {0}")]
    NotSemisimple(String),
    #[error("unclassified canonical configuration: {0}")]
    UnclassifiedConfiguration(String),

    #[error("no admissible example parameters found within a budget of {0}")]
    NoParamsFound(usize),
    #[error("direction is not a ruling direction: {0}")]
    NotRuledDirection(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
