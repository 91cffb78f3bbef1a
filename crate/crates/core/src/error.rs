use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain where the quantity is defined.
    #[error("domain error in {what}: {detail}")]
    Domain { what: &'static str, detail: String },

    /// A coefficient system has no unique solution.
    #[error("singular coefficient system: {0}")]
    SingularSystem(String),

    /// A kernel failed a numerical certification check at build time.
    #[error("kernel rejected: {0}")]
    KernelRejected(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("csv: {0}")]
    Csv(#[from] ::csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            what,
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
