use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain of a function.
    #[error("{what} out of domain: {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("need at least {min} observations, got {n}")]
    TooFewObservations { n: usize, min: usize },

    #[error("sample lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("non-finite value at position {index}")]
    NonFinite { index: usize },

    #[error("non-positive value {value} at position {index}; quotients need positive data")]
    NonPositive { index: usize, value: f64 },

    #[error("margin is constant; correlation is undefined")]
    ConstantMargin,

    #[error("no exceedances of threshold {u} in the conditioning margin")]
    NoExceedances { u: f64 },

    #[error("model ({model}) requires parameter `{param}`")]
    MissingParameter { model: String, param: &'static str },

    #[error("invalid M4 coefficients: {0}")]
    InvalidCoefficients(String),

    #[error("unknown distribution family `{0}`")]
    UnknownFamily(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(what: &'static str, value: f64) -> Self {
        Error::Domain { what, value }
    }
}
