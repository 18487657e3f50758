use thiserror::Error;

#[derive(Debug, Error)]
pub enum DunklError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("group closure did not terminate within {limit} elements")]
    GroupExplosion { limit: usize },

    #[error("capability error: {0}")]
    Capability(String),

    /// A quadrature or series result failed its a-posteriori check.
    #[error("accuracy error in {what}: {detail}")]
    Accuracy { what: String, detail: String },

    #[error("domain too small for {what}: boundary shell carries {shell:.3e} of {total:.3e}")]
    DomainTooSmall { what: String, shell: f64, total: f64 },

    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DunklError>;

impl DunklError {
    pub(crate) fn accuracy(what: impl Into<String>, detail: impl Into<String>) -> Self {
        DunklError::Accuracy {
            what: what.into(),
            detail: detail.into(),
        }
    }
}
