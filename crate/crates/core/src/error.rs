use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    /// A brute-force guard was exceeded; the computation was not attempted.
    #[error("feasibility guard exceeded: {0}")]
    Feasibility(String),

    /// Two group elements were hit a different number of times by the quotients `d1 * d2^-1`.
    #[error(
        "not a difference set: element {first_element} occurs {first_count} times \
         but element {second_element} occurs {second_count} times"
    )]
    NotDifferenceSet {
        first_element: String,
        first_count: usize,
        second_element: String,
        second_count: usize,
    },

    #[error("invalid homomorphism: {0}")]
    Homomorphism(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unknown generator `{name}` at line {line}, column {column}")]
    UnknownGenerator {
        name: String,
        line: usize,
        column: usize,
    },

    #[error("catalog corruption in entry `{entry}`: {message}")]
    CatalogCorruption { entry: String, message: String },

    /// A result that the mathematics guarantees failed to materialise.
    #[error("internal fault: {0}")]
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
