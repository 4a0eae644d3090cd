use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A tensor operation received operands with incompatible shapes.
    /// The message names the offending axis or dimension.
    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },

    /// A configuration value is out of range or inconsistent.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// A dataset, segment or trajectory does not satisfy a precondition.
    #[error("data error: {0}")]
    Data(String),

    /// A binary container failed to parse (bad magic, truncation, checksum).
    #[error("format error in {file}: {detail}")]
    Format { file: String, detail: String },

    /// A non-finite value appeared where the numerics require finiteness.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::ShapeMismatch {
            op,
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
