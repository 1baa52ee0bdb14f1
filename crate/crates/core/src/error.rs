use thiserror::Error;

use crate::io::FormatError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported view count {0}; expected 4, 6 or 8")]
    InvalidViewCount(usize),

    #[error("invalid camera: {0}")]
    InvalidCamera(String),

    #[error("pixel ({row}, {col}) outside {height}x{width} grid")]
    PixelOutOfRange {
        row: usize,
        col: usize,
        height: usize,
        width: usize,
    },

    #[error("grid must be at least 2x2, got {height}x{width}")]
    GridTooSmall { height: usize, width: usize },

    #[error("mesh has no triangles")]
    EmptyMesh,

    #[error("mesh has zero bounding radius")]
    DegenerateMesh,

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("overlap needs two distinct views, got view {0} twice")]
    SameView(usize),

    #[error("view index {index} out of range for {count} views")]
    ViewIndexOutOfRange { index: usize, count: usize },

    #[error("voxel resolution mismatch: {0} vs {1}")]
    ResolutionMismatch(usize, usize),

    #[error("point set is empty")]
    EmptyPointSet,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("loss became non-finite at iteration {iteration} (ptd={ptd}, vol={vol}, mv={mv}, vis_ce={vis_ce})")]
    NonFiniteLoss {
        iteration: usize,
        ptd: f64,
        vol: f64,
        mv: f64,
        vis_ce: f64,
    },

    #[error(transparent)]
    Format(#[from] FormatError),
}
