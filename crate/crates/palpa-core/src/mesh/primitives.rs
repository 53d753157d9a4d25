//! Procedural meshes for tests, demos and the shipped liver asset.

use std::collections::HashMap;

use super::TriMesh;
use crate::Vec3;

/// Subdivided icosahedron projected onto a sphere, uniform color 0.5.
pub fn icosphere(subdivisions: usize, radius: f64) -> TriMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vec3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
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
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, vs: &mut Vec<Vec3>| {
            *cache.entry((a.min(b), a.max(b))).or_insert_with(|| {
                vs.push(((vs[a] + vs[b]) / 2.0).normalize());
                vs.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    let n = vertices.len();
    let vertices = vertices.into_iter().map(|v| v * radius).collect();
    TriMesh::new("icosphere", vertices, faces, vec![[0.5, 0.5, 0.0]; n], None)
        .expect("icosphere is valid")
}

/// Square patch in the z = 0 plane, normals +Z, `cells` × `cells` quads.
pub fn flat_patch(size: f64, cells: usize) -> TriMesh {
    let n = cells + 1;
    let step = size / cells as f64;
    let mut vertices = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            vertices.push(Vec3::new(
                i as f64 * step - size / 2.0,
                j as f64 * step - size / 2.0,
                0.0,
            ));
        }
    }
    let mut triangles = Vec::with_capacity(2 * cells * cells);
    for j in 0..cells {
        for i in 0..cells {
            let a = j * n + i;
            triangles.push([a, a + 1, a + n + 1]);
            triangles.push([a, a + n + 1, a + n]);
        }
    }
    let count = vertices.len();
    TriMesh::new("patch", vertices, triangles, vec![[0.5, 0.5, 0.0]; count], None)
        .expect("patch is valid")
}

/// Latitude/longitude sphere with `stacks` bands and `slices` segments,
/// deformed by `shape`. Produces `2 * slices * (stacks - 1)` triangles.
pub fn uv_sphere(stacks: usize, slices: usize, shape: impl Fn(Vec3) -> Vec3) -> TriMesh {
    assert!(stacks >= 2 && slices >= 3);
    let mut vertices = vec![shape(Vec3::new(0.0, 1.0, 0.0))];
    for i in 1..stacks {
        let phi = std::f64::consts::PI * i as f64 / stacks as f64;
        for j in 0..slices {
            let theta = std::f64::consts::TAU * j as f64 / slices as f64;
            let unit = Vec3::new(phi.sin() * theta.cos(), phi.cos(), -phi.sin() * theta.sin());
            vertices.push(shape(unit));
        }
    }
    vertices.push(shape(Vec3::new(0.0, -1.0, 0.0)));
    let bottom = vertices.len() - 1;
    let ring = |i: usize, j: usize| 1 + (i - 1) * slices + (j % slices);

    let mut triangles = Vec::new();
    for j in 0..slices {
        triangles.push([0, ring(1, j), ring(1, j + 1)]);
    }
    for i in 1..stacks - 1 {
        for j in 0..slices {
            let (a, b) = (ring(i, j), ring(i, j + 1));
            let (c, d) = (ring(i + 1, j), ring(i + 1, j + 1));
            triangles.push([a, c, d]);
            triangles.push([a, d, b]);
        }
    }
    for j in 0..slices {
        triangles.push([bottom, ring(stacks - 1, j + 1), ring(stacks - 1, j)]);
    }
    let count = vertices.len();
    TriMesh::new("uv_sphere", vertices, triangles, vec![[0.5, 0.5, 0.0]; count], None)
        .expect("uv sphere is valid")
}

/// Smooth, near-convex liver-like solid of 2976 triangles inside a
/// 0.26 × 0.11 × 0.16 m box: a flattened ellipsoid whose right lobe is
/// thicker than the tapering left lobe.
pub fn liver_mesh() -> TriMesh {
    let (a, b, c) = (0.13, 0.055, 0.08);
    let mut mesh = uv_sphere(32, 48, |u| {
        // x in [-1, 1]: left lobe (x < 0) tapers in thickness and depth
        let taper = 0.8 + 0.2 * (u.x + 1.0) / 2.0;
        let under = if u.y < 0.0 { 0.75 } else { 1.0 };
        Vec3::new(a * u.x, b * u.y * taper * under, c * u.z * taper)
    });
    mesh.name = "liver_3k".to_string();
    mesh
}
