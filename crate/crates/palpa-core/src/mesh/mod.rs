//! Triangle meshes carrying per-vertex RGB material codes.
//!
//! Positions are in meters. RGB channels are normalized to `[0, 1]`; they
//! encode material parameters rather than display color (see
//! [`crate::stiffness`]).

mod codec;
mod obj;
mod ply;
pub mod primitives;

use std::fmt;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::Vec3;

pub use codec::{codec_registry, MeshCodec, MeshFormat, RawMesh};
pub use obj::ObjCodec;
pub use ply::PlyCodec;

/// Tolerance on the unit length of vertex normals.
pub const NORMAL_TOLERANCE: f64 = 1e-6;
/// Triangles with area at or below this (m²) are degenerate.
pub const MIN_TRIANGLE_AREA: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("material error: {0}")]
    Material(String),
    #[error("geometry error: {0}")]
    Geometry(String),
}

impl MeshError {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        MeshError::Parse {
            line,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    pub name: String,
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
    pub vertex_rgb: Vec<[f64; 3]>,
    pub vertex_normals: Vec<Vec3>,
}

/// One broken mesh invariant, naming the offending element.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NoTriangles,
    AttributeCount {
        attribute: &'static str,
        expected: usize,
        found: usize,
    },
    NonFiniteVertex {
        vertex: usize,
    },
    IndexOutOfRange {
        triangle: usize,
        index: usize,
    },
    DegenerateTriangle {
        triangle: usize,
        area: f64,
    },
    ChannelOutOfRange {
        vertex: usize,
        channel: usize,
        value: f64,
    },
    NonUnitNormal {
        vertex: usize,
        length: f64,
    },
}

impl Violation {
    fn is_material(&self) -> bool {
        matches!(self, Violation::ChannelOutOfRange { .. })
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoTriangles => write!(f, "mesh has no triangles"),
            Violation::AttributeCount {
                attribute,
                expected,
                found,
            } => write!(f, "{attribute}: expected {expected} entries, found {found}"),
            Violation::NonFiniteVertex { vertex } => {
                write!(f, "vertex {vertex}: non-finite position")
            }
            Violation::IndexOutOfRange { triangle, index } => {
                write!(f, "triangle {triangle}: vertex index {index} out of range")
            }
            Violation::DegenerateTriangle { triangle, area } => {
                write!(f, "triangle {triangle}: degenerate (area {area:e} m^2)")
            }
            Violation::ChannelOutOfRange {
                vertex,
                channel,
                value,
            } => write!(
                f,
                "vertex {vertex}: channel {channel} = {value} outside [0, 1]"
            ),
            Violation::NonUnitNormal { vertex, length } => {
                write!(f, "vertex {vertex}: normal length {length} is not 1")
            }
        }
    }
}

/// Result of [`validate_mesh`]; empty means valid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_mesh(mesh: &TriMesh) -> ValidationReport {
    let n = mesh.vertices.len();
    let mut violations = Vec::new();

    if mesh.triangles.is_empty() {
        violations.push(Violation::NoTriangles);
    }
    for (attribute, found) in [
        ("vertex_rgb", mesh.vertex_rgb.len()),
        ("vertex_normals", mesh.vertex_normals.len()),
    ] {
        if found != n {
            violations.push(Violation::AttributeCount {
                attribute,
                expected: n,
                found,
            });
        }
    }
    for (i, v) in mesh.vertices.iter().enumerate() {
        if !v.iter().all(|c| c.is_finite()) {
            violations.push(Violation::NonFiniteVertex { vertex: i });
        }
    }
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let mut in_range = true;
        for &index in tri {
            if index >= n {
                violations.push(Violation::IndexOutOfRange { triangle: t, index });
                in_range = false;
            }
        }
        if in_range {
            let area = triangle_area(mesh, t);
            if !(area > MIN_TRIANGLE_AREA) {
                violations.push(Violation::DegenerateTriangle { triangle: t, area });
            }
        }
    }
    for (i, rgb) in mesh.vertex_rgb.iter().enumerate() {
        for (channel, &value) in rgb.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                violations.push(Violation::ChannelOutOfRange {
                    vertex: i,
                    channel,
                    value,
                });
            }
        }
    }
    for (i, nrm) in mesh.vertex_normals.iter().enumerate() {
        let length = nrm.norm();
        if !((length - 1.0).abs() <= NORMAL_TOLERANCE) {
            violations.push(Violation::NonUnitNormal { vertex: i, length });
        }
    }
    ValidationReport { violations }
}

fn triangle_area(mesh: &TriMesh, t: usize) -> f64 {
    let [a, b, c] = mesh.triangles[t];
    let (a, b, c) = (mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]);
    0.5 * (b - a).cross(&(c - a)).norm()
}

/// Area-weighted vertex normals. Vertices referenced by no triangle get +Z.
pub fn compute_vertex_normals(vertices: &[Vec3], triangles: &[[usize; 3]]) -> Vec<Vec3> {
    let mut acc = vec![Vec3::zeros(); vertices.len()];
    for &[a, b, c] in triangles {
        // Unnormalized cross product is twice the area times the unit normal.
        let n = (vertices[b] - vertices[a]).cross(&(vertices[c] - vertices[a]));
        acc[a] += n;
        acc[b] += n;
        acc[c] += n;
    }
    acc.into_iter()
        .map(|n| {
            let len = n.norm();
            if len > 0.0 {
                n / len
            } else {
                Vec3::z()
            }
        })
        .collect()
}

impl TriMesh {
    /// Builds a mesh and checks every invariant. Normals are derived from
    /// geometry when `normals` is `None`.
    pub fn new(
        name: impl Into<String>,
        vertices: Vec<Vec3>,
        triangles: Vec<[usize; 3]>,
        vertex_rgb: Vec<[f64; 3]>,
        normals: Option<Vec<Vec3>>,
    ) -> Result<Self, MeshError> {
        let n = vertices.len();
        if let Some(&index) = triangles.iter().flatten().find(|&&i| i >= n) {
            return Err(MeshError::Geometry(format!(
                "vertex index {index} out of range for {n} vertices"
            )));
        }
        let vertex_normals = match normals {
            Some(ns) => ns
                .into_iter()
                .map(|v| {
                    let len = v.norm();
                    if len > 0.0 {
                        v / len
                    } else {
                        v
                    }
                })
                .collect(),
            None => compute_vertex_normals(&vertices, &triangles),
        };
        let mesh = TriMesh {
            name: name.into(),
            vertices,
            triangles,
            vertex_rgb,
            vertex_normals,
        };
        mesh.check()?;
        Ok(mesh)
    }

    /// Converts the first violation, if any, into a typed error.
    pub fn check(&self) -> Result<(), MeshError> {
        let report = validate_mesh(self);
        if let Some(v) = report.violations.iter().find(|v| v.is_material()) {
            return Err(MeshError::Material(v.to_string()));
        }
        match report.violations.first() {
            Some(v) => Err(MeshError::Geometry(v.to_string())),
            None => Ok(()),
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_vertices(&self, t: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Unit face normal following the winding order.
    pub fn face_normal(&self, t: usize) -> Vec3 {
        let [a, b, c] = self.triangle_vertices(t);
        (b - a).cross(&(c - a)).normalize()
    }

    pub fn centroid(&self) -> Vec3 {
        let sum: Vec3 = self.vertices.iter().sum();
        sum / self.vertices.len() as f64
    }

    /// Axis-aligned bounds `(min, max)`.
    pub fn bounds(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }

    /// Same geometry with a replacement RGB field.
    pub fn with_rgb(&self, vertex_rgb: Vec<[f64; 3]>) -> TriMesh {
        TriMesh {
            vertex_rgb,
            ..self.clone()
        }
    }

    /// Applies `f` to every position and normal; `f_dir` maps directions.
    pub fn transformed(&self, f: impl Fn(&Vec3) -> Vec3, f_dir: impl Fn(&Vec3) -> Vec3) -> TriMesh {
        TriMesh {
            vertices: self.vertices.iter().map(f).collect(),
            vertex_normals: self.vertex_normals.iter().map(f_dir).collect(),
            ..self.clone()
        }
    }
}

/// Loads a mesh in the named format.
pub fn load_mesh(path: impl AsRef<Path>, format: MeshFormat) -> Result<TriMesh, MeshError> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    let fallback_name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "mesh".to_string());
    parse_mesh(&bytes, format, &fallback_name)
}

/// Loads a mesh, picking the format from the file extension.
pub fn load_mesh_auto(path: impl AsRef<Path>) -> Result<TriMesh, MeshError> {
    let path = path.as_ref();
    let format = MeshFormat::from_path(path).ok_or_else(|| {
        MeshError::parse(0, format!("unrecognized mesh extension: {}", path.display()))
    })?;
    load_mesh(path, format)
}

pub fn parse_mesh(bytes: &[u8], format: MeshFormat, name: &str) -> Result<TriMesh, MeshError> {
    let raw = format.codec().decode(bytes)?;
    raw.into_mesh(name)
}

pub fn save_mesh(mesh: &TriMesh, path: impl AsRef<Path>, format: MeshFormat) -> Result<(), MeshError> {
    let mut out = Vec::new();
    format.codec().encode(mesh, &mut out)?;
    fs::write(path, out)?;
    Ok(())
}
