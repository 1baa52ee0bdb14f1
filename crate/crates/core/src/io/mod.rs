//! File formats: OBJ meshes, ASCII PLY point clouds, the binary MVPC
//! container and raw voxel bitsets.

mod mvpc_file;
mod obj;
mod ply;
mod voxel;

pub use mvpc_file::{decode_mvpc, encode_mvpc, mvpc_file_size, read_mvpc, write_mvpc, MVPC_MAGIC, MVPC_VERSION};
pub use obj::{parse_obj, read_obj, write_obj_mesh, write_obj_to};
pub use ply::{write_ply_points, write_ply_to};
pub use voxel::{encode_voxels, write_voxels, VOXEL_MAGIC};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("not an MVPC file")]
    NotMvpc,

    #[error("unsupported MVPC version {0}")]
    UnsupportedVersion(u16),

    #[error("unexpected end of file")]
    UnexpectedEof,

    #[error("{0} trailing bytes after MVPC payload")]
    TrailingBytes(usize),

    #[error("invalid MVPC contents: {0}")]
    InvalidMvpc(String),

    #[error("OBJ line {line}: {message}")]
    Obj { line: usize, message: String },

    #[error("{normals} normals given for {points} points")]
    NormalsMismatch { points: usize, normals: usize },
}
