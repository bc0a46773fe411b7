use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected Z2^{expected}, found Z2^{found}")]
    Dimension { expected: usize, found: usize },

    #[error("signature error: {0}")]
    Signature(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("cannot truncate to order {requested}: series is only known up to order {available}")]
    Order { requested: usize, available: usize },

    #[error("image of `{variable}` is not homogeneous of degree {expected}: monomial {monomial} has degree {found}")]
    DegreeMismatch {
        variable: String,
        expected: String,
        monomial: String,
        found: String,
    },

    #[error("no image given for target variable `{0}`")]
    MissingImage(String),

    #[error("linear block of degree {block} is not invertible over the coefficient ring")]
    Singular { block: String },

    #[error("base map is not the identity; an explicit inverse base map is required")]
    MissingBaseInverse,

    #[error("unbound symbol `{0}`")]
    UnboundSymbol(String),

    #[error("product {left}*{right} is not homogeneous: component {component} has degree {found}, expected {expected}")]
    Grading {
        left: String,
        right: String,
        component: String,
        expected: String,
        found: String,
    },

    #[error("algebra error: {0}")]
    Algebra(String),

    #[error("search budget exceeded: more than {bound} nodes would be explored")]
    Budget { bound: u64 },

    #[error("atlas error: {0}")]
    Atlas(String),

    #[error("a partition of unity is required on the atlas: {0}")]
    MissingPartition(String),

    #[error("internal consistency failure: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn parse(line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column,
            message: message.into(),
        }
    }
}
