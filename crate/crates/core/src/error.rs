use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse failure at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("out-of-range index {index} (valid range is 0..{len})")]
    OutOfRangeIndex { index: i64, len: usize },

    #[error("face {face} is not a triangle after triangulation")]
    NonTriangle { face: usize },

    #[error("face {face} repeats vertex {vertex}")]
    RepeatedVertex { face: usize, vertex: usize },

    #[error("edge ({a}, {b}) is shared by {count} faces")]
    NonManifoldEdge { a: usize, b: usize, count: usize },

    #[error("mesh has no vertices")]
    EmptyMesh,

    #[error("degenerate faces below the area floor: {faces:?}")]
    DegenerateFaces { faces: Vec<usize> },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("meshes are incompatible: {0}")]
    Incompatible(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown region label `{0}`")]
    UnknownRegion(String),

    #[error("region is empty")]
    EmptyRegion,

    #[error("reduced system is singular: {0}")]
    SingularSystem(String),

    #[error("solver did not converge (relative residual {residual:.3e})")]
    NonConvergence { residual: f64 },

    #[error("degenerate source triangle (signed area {area:.3e} px²)")]
    DegenerateTriangle { area: f64 },

    #[error("invalid camera: {0}")]
    InvalidCamera(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("png decode error: {0}")]
    PngDecode(#[from] png::DecodingError),

    #[error("png encode error: {0}")]
    PngEncode(#[from] png::EncodingError),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
