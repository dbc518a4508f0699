use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid range: {0}")]
    InvalidRange(String),
    #[error("degenerate range: {0}")]
    DegenerateRange(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("plane behind target camera (b = {0})")]
    PlaneBehindCamera(f64),
    #[error("singular intrinsics")]
    SingularIntrinsics,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("empty plane list")]
    EmptyPlaneList,
    #[error("missing resolution {0} in pyramid")]
    MissingResolution(usize),
    #[error("degenerate mask: {0}")]
    DegenerateMask(String),
    #[error("zero-variance embedding")]
    ZeroVariance,
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("unknown scene kind `{0}`")]
    UnknownSceneKind(String),
    #[error("missing file {}", .0.display())]
    MissingFile(PathBuf),
    #[error("manifest error: {0}")]
    Manifest(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("image codec error on {}: {source}", path.display())]
    Codec {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
