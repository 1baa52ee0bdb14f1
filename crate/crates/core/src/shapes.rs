//! Procedural meshes used by tests, the acceptance suite and the CLI demos.

use std::collections::HashMap;

use nalgebra::Rotation3;

use crate::mesh::TriangleMesh;
use crate::{Point3, Vec3};

/// Unit icosphere with `subdivisions` rounds of 4:1 splitting, outward winding.
/// Subdivision level `k` has `20 * 4^k` triangles.
pub fn icosphere(subdivisions: u32) -> TriangleMesh {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Point3> = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut triangles: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Point3>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                vertices.push(((vertices[a] + vertices[b]) * 0.5).normalize());
                vertices.len() - 1
            })
        };
        let mut next = Vec::with_capacity(triangles.len() * 4);
        for [a, b, c] in triangles {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        triangles = next;
    }
    TriangleMesh {
        vertices,
        triangles,
        tags: None,
    }
}

/// Axis-aligned square `[-half, half]²` in the plane `z = z`, normal +z.
pub fn quad(half: f64, z: f64) -> TriangleMesh {
    TriangleMesh {
        vertices: vec![
            Vec3::new(-half, -half, z),
            Vec3::new(half, -half, z),
            Vec3::new(half, half, z),
            Vec3::new(-half, half, z),
        ],
        triangles: vec![[0, 1, 2], [0, 2, 3]],
        tags: None,
    }
}

/// A small quad stacked above a larger one; seen from +z the top quad's
/// border is an occluding contour over the lower quad.
pub fn stacked_quads(top_half: f64, top_z: f64, bottom_half: f64, bottom_z: f64) -> TriangleMesh {
    let mut mesh = quad(top_half, top_z);
    mesh.append(&quad(bottom_half, bottom_z));
    mesh
}

/// Appends the parallelogram `origin + a*eu + b*ev`, `a, b` in `[0, 1]`,
/// as `n x n` quads. The face normal is `eu x ev`.
fn push_rect(mesh: &mut TriangleMesh, origin: Point3, eu: Vec3, ev: Vec3, n: usize) {
    let n = n.max(1);
    let base = mesh.vertices.len();
    for j in 0..=n {
        for i in 0..=n {
            let a = i as f64 / n as f64;
            let b = j as f64 / n as f64;
            mesh.vertices.push(origin + eu * a + ev * b);
        }
    }
    let id = |i: usize, j: usize| base + j * (n + 1) + i;
    for j in 0..n {
        for i in 0..n {
            mesh.triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            mesh.triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
}

/// Open box: the five faces of `[-half, half]³` without the `+z` lid, each
/// face split into `n x n` quads. Single-sided sheets, outward winding.
pub fn open_box(half: f64, n: usize) -> TriangleMesh {
    let mut mesh = TriangleMesh::default();
    let s = half;
    let (x, y, z) = (Vec3::x() * 2.0 * s, Vec3::y() * 2.0 * s, Vec3::z() * 2.0 * s);
    let lo = Vec3::new(-s, -s, -s);
    push_rect(&mut mesh, lo, y, x, n); // -z
    push_rect(&mut mesh, Vec3::new(s, -s, -s), y, z, n); // +x
    push_rect(&mut mesh, lo, z, y, n); // -x
    push_rect(&mut mesh, Vec3::new(-s, s, -s), z, x, n); // +y
    push_rect(&mut mesh, lo, x, z, n); // -y
    mesh
}

/// Thick-walled square cup: the solid `[-outer, outer]² x [-height/2, height/2]`
/// minus the cavity `[-inner, inner]² x [height/2 - depth, height/2]`, open at
/// `+z`. Closed surface, normals pointing out of the solid (into the cavity on
/// the inner faces). Each rectangle is split into `n x n` quads.
pub fn cup(outer: f64, inner: f64, height: f64, depth: f64, n: usize) -> TriangleMesh {
    let mut mesh = TriangleMesh::default();
    let (a, b) = (outer, inner);
    let (z0, z1) = (-0.5 * height, 0.5 * height);
    let zf = z1 - depth;
    let (ex, ey) = (Vec3::x(), Vec3::y());
    let h = Vec3::z() * height;
    let d = Vec3::z() * depth;

    push_rect(&mut mesh, Vec3::new(-a, -a, z0), ey * 2.0 * a, ex * 2.0 * a, n);
    push_rect(&mut mesh, Vec3::new(a, -a, z0), ey * 2.0 * a, h, n);
    push_rect(&mut mesh, Vec3::new(-a, -a, z0), h, ey * 2.0 * a, n);
    push_rect(&mut mesh, Vec3::new(-a, a, z0), h, ex * 2.0 * a, n);
    push_rect(&mut mesh, Vec3::new(-a, -a, z0), ex * 2.0 * a, h, n);

    // Rim: four strips around the opening.
    let w = a - b;
    push_rect(&mut mesh, Vec3::new(-a, -a, z1), ex * 2.0 * a, ey * w, n);
    push_rect(&mut mesh, Vec3::new(-a, b, z1), ex * 2.0 * a, ey * w, n);
    push_rect(&mut mesh, Vec3::new(-a, -b, z1), ex * w, ey * 2.0 * b, n);
    push_rect(&mut mesh, Vec3::new(b, -b, z1), ex * w, ey * 2.0 * b, n);

    push_rect(&mut mesh, Vec3::new(-b, -b, zf), ex * 2.0 * b, ey * 2.0 * b, n);
    push_rect(&mut mesh, Vec3::new(b, -b, zf), d, ey * 2.0 * b, n);
    push_rect(&mut mesh, Vec3::new(-b, -b, zf), ey * 2.0 * b, d, n);
    push_rect(&mut mesh, Vec3::new(-b, b, zf), ex * 2.0 * b, d, n);
    push_rect(&mut mesh, Vec3::new(-b, -b, zf), d, ex * 2.0 * b, n);
    mesh
}

/// Applies a rotation about the origin to every vertex.
pub fn rotated(mesh: &TriangleMesh, rotation: &Rotation3<f64>) -> TriangleMesh {
    let mut out = mesh.clone();
    for v in &mut out.vertices {
        *v = rotation * *v;
    }
    out
}

/// Applies `p -> p * scale + offset` to every vertex.
pub fn transformed(mesh: &TriangleMesh, scale: f64, offset: Vec3) -> TriangleMesh {
    let mut out = mesh.clone();
    for v in &mut out.vertices {
        *v = *v * scale + offset;
    }
    out
}
