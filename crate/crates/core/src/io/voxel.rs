//! Raw voxel export: `"VOX0"`, resolution `R` as u32 LE, then `R³` occupancy
//! bits with x fastest, packed least-significant bit first.

use std::fs;
use std::path::Path;

use super::FormatError;
use crate::metrics::VoxelGrid;

pub const VOXEL_MAGIC: &[u8; 4] = b"VOX0";

pub fn encode_voxels(grid: &VoxelGrid) -> Vec<u8> {
    let r = grid.resolution();
    let bits = r * r * r;
    let mut out = Vec::with_capacity(8 + bits.div_ceil(8));
    out.extend_from_slice(VOXEL_MAGIC);
    out.extend_from_slice(&(r as u32).to_le_bytes());
    let mut bytes = vec![0u8; bits.div_ceil(8)];
    for (k, &occ) in grid.occupancy().iter().enumerate() {
        if occ {
            bytes[k / 8] |= 1 << (k % 8);
        }
    }
    out.extend_from_slice(&bytes);
    out
}

pub fn write_voxels(grid: &VoxelGrid, path: impl AsRef<Path>) -> Result<(), FormatError> {
    fs::write(path.as_ref(), encode_voxels(grid))?;
    Ok(())
}
