use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate quadrilateral: {0}")]
    DegenerateQuad(String),
    #[error("invalid JPEG quality {0}, expected 1..=100")]
    InvalidQuality(u8),
    #[error("malformed image stream: {0}")]
    MalformedStream(String),
    #[error("image {width}x{height} is too small for localization")]
    ImageTooSmall { width: usize, height: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("unsupported network configuration: {0}")]
    UnsupportedConfig(String),
    #[error("bad file format: {0}")]
    Format(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("manifest is empty")]
    EmptyManifest,
    #[error("invalid name for fiscal code: {0:?}")]
    InvalidName(String),
    #[error("source list {0:?} is empty")]
    EmptyList(&'static str),
    #[error("text {text:?} does not fit field {field:?}")]
    TextOverflow { field: String, text: String },
    #[error("document placement infeasible: {0}")]
    PlacementInfeasible(String),
    #[error("no layout registered for class {0}")]
    MissingLayout(String),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("I/O error on {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by the filesystem rather than by the data.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
