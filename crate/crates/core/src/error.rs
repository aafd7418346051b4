use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no structure found in prototype")]
    NoStructureFound,
    #[error("malformed audio: {0}")]
    Decode(String),
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("clip is shorter than one analysis frame")]
    EmptyMap,
    #[error("no energy peaks above the floor")]
    NoPeaksFound,
    #[error("training labels contain fewer than two classes")]
    DegenerateLabels,
    #[error("empty input")]
    EmptyInput,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("serialization error: {0}")]
    Serde(String),
    #[error("image error: {0}")]
    Image(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coarse classification used to choose a process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Internal,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidParameter(_) | Error::Config(_) | Error::InvalidKernel(_) => ErrorClass::Config,
            Error::Shape(_) => ErrorClass::Internal,
            _ => ErrorClass::Data,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

impl From<image::ImageError> for Error {
    fn from(e: image::ImageError) -> Self {
        Error::Image(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
