use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unknown {kind} `{name}` (available: {available})")]
    UnknownName {
        kind: &'static str,
        name: String,
        available: String,
    },

    #[error("conductivity is not positive at ({x}, {y}): sigma = {value}")]
    NonPositiveConductivity { x: f64, y: f64, value: f64 },

    #[error("boundary condition is undefined near ({x}, {y})")]
    UndefinedBoundaryCondition { x: f64, y: f64 },

    #[error("pinned value {value} rejected: {reason}")]
    InvalidPin { value: f64, reason: String },

    #[error("trace {index} is numerically dependent on the previous traces (relative norm {relative_norm:e})")]
    RankDeficient { index: usize, relative_norm: f64 },

    #[error("collocation matrix is singular")]
    SingularMatrix,

    #[error("collocation matrix is ill-conditioned (condition estimate {estimate:e} > {limit:e})")]
    IllConditioned { estimate: f64, limit: f64 },

    #[error("point ({x}, {y}) lies outside the domain")]
    OutsideDomain { x: f64, y: f64 },

    #[error("formal power table does not retain interior samples")]
    InteriorNotRetained,

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
