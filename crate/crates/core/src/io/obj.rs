use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::FormatError;
use crate::mesh::TriangleMesh;
use crate::Vec3;

/// Reads `v` and `f` records; polygons are fan-triangulated. Texture and
/// normal references (`f 1/2/3`) are accepted and ignored, as are all other
/// record types.
pub fn read_obj(path: impl AsRef<Path>) -> Result<TriangleMesh, FormatError> {
    let file = File::open(path.as_ref())?;
    parse_obj(BufReader::new(file))
}

pub fn parse_obj(reader: impl BufRead) -> Result<TriangleMesh, FormatError> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (line_idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = line_idx + 1;
        let err = |message: String| FormatError::Obj { line: line_no, message };
        let content = line.split('#').next().unwrap_or("");
        let mut fields = content.split_whitespace();
        match fields.next() {
            Some("v") => {
                let coords: Vec<f64> = fields
                    .take(3)
                    .map(|f| f.parse::<f64>().map_err(|_| err(format!("bad coordinate {f:?}"))))
                    .collect::<Result<_, _>>()?;
                if coords.len() != 3 {
                    return Err(err("vertex needs three coordinates".into()));
                }
                if coords.iter().any(|c| !c.is_finite()) {
                    return Err(err("non-finite coordinate".into()));
                }
                vertices.push(Vec3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let mut ids = Vec::new();
                for f in fields {
                    let head = f.split('/').next().unwrap_or("");
                    let raw: i64 = head.parse().map_err(|_| err(format!("bad index {f:?}")))?;
                    let n = vertices.len() as i64;
                    let resolved = match raw {
                        0 => return Err(err("index 0 is not valid".into())),
                        r if r > 0 => r - 1,
                        r => n + r,
                    };
                    if resolved < 0 || resolved >= n {
                        return Err(err(format!("index {raw} out of range for {n} vertices")));
                    }
                    ids.push(resolved as usize);
                }
                if ids.len() < 3 {
                    return Err(err("face needs at least three vertices".into()));
                }
                for k in 1..ids.len() - 1 {
                    let tri = [ids[0], ids[k], ids[k + 1]];
                    if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                        return Err(err("face repeats a vertex".into()));
                    }
                    triangles.push(tri);
                }
            }
            _ => {}
        }
    }
    Ok(TriangleMesh {
        vertices,
        triangles,
        tags: None,
    })
}

/// Writes `v`/`f` records with shortest round-trip float formatting.
pub fn write_obj_to(mesh: &TriangleMesh, mut out: impl Write) -> Result<(), FormatError> {
    for v in &mesh.vertices {
        writeln!(out, "v {} {} {}", v.x, v.y, v.z)?;
    }
    for t in &mesh.triangles {
        writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_obj_mesh(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<(), FormatError> {
    write_obj_to(mesh, BufWriter::new(File::create(path.as_ref())?))
}
