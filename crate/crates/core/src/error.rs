use thiserror::Error;

/// Everything that can go wrong between a metric jet and a reported density.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("{op}: constant term {value} is outside the domain")]
    Domain { op: &'static str, value: f64 },

    /// The supplied jet is too shallow. `required` and `available` are jet
    /// orders of the object named by `what`.
    #[error("insufficient jet order for {what}: required order {required}, available {available}")]
    InsufficientJetOrder {
        what: String,
        required: usize,
        available: usize,
    },

    #[error("constant term of the metric is not positive definite")]
    NotPositiveDefinite,

    #[error("matrix jet is singular at the base point")]
    Singular,

    #[error("metric is not symmetric at entry ({0}, {1})")]
    NotSymmetric(usize, usize),

    #[error("metric is not normalized: g(x0) must be the identity")]
    NotNormalized,

    #[error("{what} needs dimension at least {min}, got {n}")]
    DimensionTooSmall { what: &'static str, n: usize, min: usize },

    #[error("principal symbol is not admissible: {0}")]
    NotAdmissible(String),

    #[error("expansion has no part of degree {0}")]
    MissingDegree(i32),

    #[error("expansion too shallow: required depth {required}, available {available}")]
    InsufficientDepth { required: usize, available: usize },

    #[error("imaginary residue {0:e} exceeds tolerance")]
    ImaginaryResidue(f64),

    #[error("symbols carry different denominators")]
    DenominatorMismatch,

    #[error("homogeneity violated: {0}")]
    Homogeneity(String),

    /// A query that needs lower-order terms of an operator known only through
    /// its principal part.
    #[error("{0}")]
    PrincipalOnly(String),

    #[error("slot mismatch: {0}")]
    SlotMismatch(String),

    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("`{name}` takes {expected} argument(s), found {found}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
    },

    #[error("invalid input: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn short(what: impl Into<String>, required: usize, available: usize) -> Error {
    Error::InsufficientJetOrder {
        what: what.into(),
        required,
        available,
    }
}
