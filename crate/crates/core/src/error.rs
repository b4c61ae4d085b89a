use alloc::boxed::Box;
use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("non-finite value in feature `{feature}` at row {row}")]
    NonFinite { feature: String, row: usize },
    #[error("duplicate feature name `{0}`")]
    DuplicateFeature(String),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("row width {got} does not match the {expected} features of the model")]
    WidthMismatch { expected: usize, got: usize },
    #[error("statistical domain error: {0}")]
    Domain(String),
    #[error("zero variance in t-test input")]
    ZeroVariance,
    #[error("error vectors are not paired: {0}")]
    Unpaired(String),
    #[error("replicate {index} failed: {source}")]
    Replicate { index: usize, source: Box<Error> },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParam(msg.into())
    }
}
