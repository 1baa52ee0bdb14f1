//! Binary MVPC container, little-endian throughout:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "MVPC"
//! 4       2     version (u16) = 1
//! 6       2     N views (u16)
//! 8       4     H (u32)
//! 12      4     W (u32)
//! 16      ...   N x [camera block (72 bytes) | H*W*4 f32 payload]
//! ```
//!
//! A camera block is `view_dir` (3 x f64), `up` (3 x f64), then
//! `ortho_half_width`, `near_depth`, `far_depth` (f64 each). The payload is
//! row-major with channels `(x, y, z, v)`. Total size is
//! `16 + N * (72 + 16 * H * W)` bytes.

use std::fs;
use std::path::Path;

use super::FormatError;
use crate::camera::{ViewCamera, ViewRig};
use crate::grid::{Mvpc, PointGridMap};
use crate::Vec3;

pub const MVPC_MAGIC: &[u8; 4] = b"MVPC";
pub const MVPC_VERSION: u16 = 1;
const HEADER_BYTES: usize = 16;
const CAMERA_BYTES: usize = 72;

pub fn mvpc_file_size(views: usize, height: usize, width: usize) -> usize {
    HEADER_BYTES + views * (CAMERA_BYTES + 16 * height * width)
}

pub fn encode_mvpc(m: &Mvpc) -> Result<Vec<u8>, FormatError> {
    let (n, h, w) = (m.view_count(), m.height(), m.width());
    let n16 = u16::try_from(n).map_err(|_| FormatError::InvalidMvpc(format!("{n} views do not fit u16")))?;
    let h32 = u32::try_from(h).map_err(|_| FormatError::InvalidMvpc("height does not fit u32".into()))?;
    let w32 = u32::try_from(w).map_err(|_| FormatError::InvalidMvpc("width does not fit u32".into()))?;
    let mut out = Vec::with_capacity(mvpc_file_size(n, h, w));
    out.extend_from_slice(MVPC_MAGIC);
    out.extend_from_slice(&MVPC_VERSION.to_le_bytes());
    out.extend_from_slice(&n16.to_le_bytes());
    out.extend_from_slice(&h32.to_le_bytes());
    out.extend_from_slice(&w32.to_le_bytes());
    for view in &m.views {
        let cam = &view.camera;
        for v in [cam.view_dir(), cam.up()] {
            for c in v.iter() {
                out.extend_from_slice(&c.to_le_bytes());
            }
        }
        for s in [cam.ortho_half_width(), cam.near_depth(), cam.far_depth()] {
            out.extend_from_slice(&s.to_le_bytes());
        }
        for (p, &vis) in view.points.iter().zip(&view.visibility) {
            for c in [p.x, p.y, p.z, vis] {
                out.extend_from_slice(&(c as f32).to_le_bytes());
            }
        }
    }
    debug_assert_eq!(out.len(), mvpc_file_size(n, h, w));
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take<const K: usize>(&mut self) -> Result<[u8; K], FormatError> {
        let end = self.pos + K;
        let slice = self.bytes.get(self.pos..end).ok_or(FormatError::UnexpectedEof)?;
        self.pos = end;
        Ok(slice.try_into().expect("length checked"))
    }

    fn f64(&mut self) -> Result<f64, FormatError> {
        Ok(f64::from_le_bytes(self.take()?))
    }

    fn f32(&mut self) -> Result<f32, FormatError> {
        Ok(f32::from_le_bytes(self.take()?))
    }

    fn vec3(&mut self) -> Result<Vec3, FormatError> {
        Ok(Vec3::new(self.f64()?, self.f64()?, self.f64()?))
    }
}

pub fn decode_mvpc(bytes: &[u8]) -> Result<Mvpc, FormatError> {
    let mut cur = Cursor { bytes, pos: 0 };
    let magic_len = bytes.len().min(4);
    if bytes[..magic_len] != MVPC_MAGIC[..magic_len] {
        return Err(FormatError::NotMvpc);
    }
    let magic: [u8; 4] = cur.take()?;
    debug_assert_eq!(&magic, MVPC_MAGIC);
    let version = u16::from_le_bytes(cur.take()?);
    if version != MVPC_VERSION {
        return Err(FormatError::UnsupportedVersion(version));
    }
    let n = u16::from_le_bytes(cur.take()?) as usize;
    let h = u32::from_le_bytes(cur.take()?) as usize;
    let w = u32::from_le_bytes(cur.take()?) as usize;
    if n == 0 || h == 0 || w == 0 {
        return Err(FormatError::InvalidMvpc(format!("empty dimensions {n}x{h}x{w}")));
    }
    let expected = mvpc_file_size(n, h, w);
    if bytes.len() < expected {
        return Err(FormatError::UnexpectedEof);
    }
    if bytes.len() > expected {
        return Err(FormatError::TrailingBytes(bytes.len() - expected));
    }
    let mut cameras = Vec::with_capacity(n);
    let mut views = Vec::with_capacity(n);
    for k in 0..n {
        let view_dir = cur.vec3()?;
        let up = cur.vec3()?;
        let (half, near, far) = (cur.f64()?, cur.f64()?, cur.f64()?);
        let camera = ViewCamera::new(view_dir, up, half, near, far, h, w)
            .map_err(|e| FormatError::InvalidMvpc(format!("view {k}: {e}")))?;
        let mut points = Vec::with_capacity(h * w);
        let mut visibility = Vec::with_capacity(h * w);
        for _ in 0..h * w {
            let (x, y, z, v) = (cur.f32()?, cur.f32()?, cur.f32()?, cur.f32()?);
            points.push(Vec3::new(x as f64, y as f64, z as f64));
            visibility.push(v as f64);
        }
        cameras.push(camera.clone());
        views.push(PointGridMap {
            camera,
            points,
            visibility,
        });
    }
    let rig = ViewRig::new(cameras).map_err(|e| FormatError::InvalidMvpc(e.to_string()))?;
    Mvpc::new(rig, views).map_err(|e| FormatError::InvalidMvpc(e.to_string()))
}

pub fn write_mvpc(m: &Mvpc, path: impl AsRef<Path>) -> Result<(), FormatError> {
    let bytes = encode_mvpc(m)?;
    fs::write(path.as_ref(), bytes)?;
    Ok(())
}

pub fn read_mvpc(path: impl AsRef<Path>) -> Result<Mvpc, FormatError> {
    decode_mvpc(&fs::read(path.as_ref())?)
}
