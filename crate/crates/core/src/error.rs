use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("feature alignment failed: {0}")]
    Alignment(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("joint pass {pass}: {source}")]
    JointPass {
        pass: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("undefined quantity: {0}")]
    Undefined(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    /// True for failures that originate in the numerics rather than the data.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Numerical(_) => true,
            Error::JointPass { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
