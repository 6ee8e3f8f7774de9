use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("mask has no foreground pixel")]
    EmptyMask,
    #[error("largest component has only {0} border pixels")]
    DegenerateComponent(usize),
    #[error("contour has zero perimeter")]
    DegenerateContour,
    #[error("transform is singular (determinant {0:e})")]
    SingularTransform(f64),
    #[error("polygon needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("bounding box has zero extent")]
    DegenerateBox,
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("point set is empty")]
    EmptySet,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("no visible ground-truth points")]
    NoVisiblePoints,
    #[error("need at least {needed} frames, got {got}")]
    TooFewFrames { needed: usize, got: usize },
    #[error("no control points")]
    NoControls,
    #[error("canvas too small: {0}")]
    CanvasTooSmall(String),
    #[error("frame sequence is empty")]
    EmptyFrames,
    #[error("bad initial point set: {0}")]
    BadInit(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.into(),
        }
    }
}
