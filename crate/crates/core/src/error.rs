use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    Lattice(String),

    #[error("invalid interaction shape: {0}")]
    Shape(String),

    #[error("bond family is empty: {0}")]
    EmptyFamily(String),

    #[error("site {site} out of range for a lattice of {volume} sites")]
    SiteOutOfRange { site: usize, volume: usize },

    #[error("budget exceeded: {what} needs {requested}, limit is {limit}")]
    Budget {
        what: &'static str,
        requested: u128,
        limit: u128,
    },

    #[error("missing coupling: {0}")]
    MissingCoupling(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("Nishimori point undefined: {0}")]
    Nishimori(String),

    #[error("eigensolver failed to converge for a {0}x{0} matrix")]
    Eigensolver(usize),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by user input rather than numerics or IO.
    pub fn is_config(&self) -> bool {
        !matches!(
            self,
            Error::Eigensolver(_) | Error::Io(_) | Error::Csv(_) | Error::Json(_)
        )
    }
}
