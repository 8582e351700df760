use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Schema(String),
    #[error("resource limit: {0}")]
    ResourceLimit(String),
    #[error("degenerate model: {0}")]
    Degenerate(String),
    #[error("inadmissible word {0:?}")]
    Inadmissible(Vec<usize>),
    #[error("itinerary undefined: orbit of {0} leaves every branch domain")]
    ItineraryUndefined(f64),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("empty level set: [{0}, {1}] misses the exponent range")]
    EmptyLevelSet(f64, f64),
    #[error("pressure stays positive up to d = {0}")]
    Unbounded(f64),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// Process exit status for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Schema(_) => 2,
            Error::ResourceLimit(_) => 3,
            Error::Degenerate(_) => 4,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
