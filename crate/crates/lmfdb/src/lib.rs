//! Elliptic-curve records from the LMFDB API, with offline fixtures and an
//! on-disk cache, converted into classifier descriptors.

mod client;
mod record;

pub use client::{
    fixture_text, load_fixture, write_atomic, Client, BASE_URL_ENV, CACHE_DIR_ENV, DEFAULT_BASE_URL, MAX_CONCURRENT,
};
pub use record::{is_image_label, to_descriptor, validate_label, CurveRecord, SCHEMA_VERSION};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LmfdbError {
    #[error("invalid curve label {0:?}")]
    InvalidLabel(String),

    #[error("unknown curve label {0}")]
    UnknownLabel(String),

    #[error("response is missing field {field:?} (expected schema {schema})")]
    SchemaDrift { field: String, schema: &'static str },

    #[error("network failure after {attempts} attempts: {message}")]
    Network { attempts: u32, message: String },

    #[error("{0} is not cached and live requests are disabled")]
    Offline(String),

    #[error("unknown image class {0}")]
    UnknownImageClass(String),

    #[error("invalid record: {0}")]
    Invalid(String),

    #[error("io: {0}")]
    Io(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Core(#[from] divfield_core::Error),
}

impl From<std::io::Error> for LmfdbError {
    fn from(e: std::io::Error) -> Self {
        LmfdbError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LmfdbError>;
