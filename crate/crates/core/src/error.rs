use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A tree-vertex branch sequence that does not describe a vertex of T_d.
    #[error("invalid vertex encoding: {0}")]
    Encoding(String),

    /// An argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A region or enumeration exceeded its configured size budget.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// An inconsistent or unusable run configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// A statistical decision could not be reached within the escalation budget.
    #[error("undecided: {0}")]
    Undecided(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
