use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid value for `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("field length {found} does not match grid size {expected}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("derivative order {0} is not supported (expected 1..=4)")]
    DerivativeOrder(u32),

    #[error("non-finite values in `{term}`")]
    NonFinite { term: String },

    #[error("instability at t = {time}: {detail}")]
    Instability { time: f64, detail: String },

    #[error("boundary magnitude {magnitude:e} exceeds threshold {threshold:e}")]
    BoundaryContract { magnitude: f64, threshold: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
