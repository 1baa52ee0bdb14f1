use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::FormatError;
use crate::{Point3, Vec3};

/// ASCII PLY with `x y z` and, when normals are given, `nx ny nz`.
pub fn write_ply_to(points: &[Point3], normals: Option<&[Vec3]>, mut out: impl Write) -> Result<(), FormatError> {
    if let Some(n) = normals {
        if n.len() != points.len() {
            return Err(FormatError::NormalsMismatch {
                points: points.len(),
                normals: n.len(),
            });
        }
    }
    writeln!(out, "ply")?;
    writeln!(out, "format ascii 1.0")?;
    writeln!(out, "element vertex {}", points.len())?;
    for axis in ["x", "y", "z"] {
        writeln!(out, "property double {axis}")?;
    }
    if normals.is_some() {
        for axis in ["nx", "ny", "nz"] {
            writeln!(out, "property double {axis}")?;
        }
    }
    writeln!(out, "end_header")?;
    for (k, p) in points.iter().enumerate() {
        match normals {
            Some(n) => writeln!(out, "{} {} {} {} {} {}", p.x, p.y, p.z, n[k].x, n[k].y, n[k].z)?,
            None => writeln!(out, "{} {} {}", p.x, p.y, p.z)?,
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_ply_points(points: &[Point3], normals: Option<&[Vec3]>, path: impl AsRef<Path>) -> Result<(), FormatError> {
    // Validate before touching the file system.
    if let Some(n) = normals {
        if n.len() != points.len() {
            return Err(FormatError::NormalsMismatch {
                points: points.len(),
                normals: n.len(),
            });
        }
    }
    write_ply_to(points, normals, BufWriter::new(File::create(path.as_ref())?))
}
