use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("schema error: missing or invalid key `{key}` in {context}")]
    Schema { key: String, context: String },

    #[error("reference error: unknown {kind} {id}")]
    Reference { kind: &'static str, id: i64 },

    #[error("range error: {0}")]
    Range(String),

    #[error("format error on line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("rle length mismatch: counts sum to {actual}, expected {expected}")]
    RleLength { expected: u64, actual: u64 },

    #[error("rle codec error at character {index}: {message}")]
    Codec { index: usize, message: String },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("degenerate path: need at least 2 points, got {0}")]
    DegeneratePath(usize),

    #[error("placement error: could not place instance {index} after {attempts} attempts")]
    Placement { index: usize, attempts: usize },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image error on {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn schema(key: impl Into<String>, context: impl Into<String>) -> Self {
        Error::Schema {
            key: key.into(),
            context: context.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input, false for failures of the tool itself.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Internal(_))
    }
}
