//! Per-tap cone glyphs: where, in which direction and how hard each tap
//! pressed.
//!
//! Cone tessellation with `n` segments: vertex 0 is the apex, vertices
//! `1..=n` the base ring. Triangles: `n` sides `(apex, ring i, ring i+1)` and
//! a fan of `n - 2` base triangles, so each cone has `n + 1` vertices and
//! `2n - 2` faces.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assessment::TapInterval;
use crate::mesh::{MeshFormat, TriMesh};
use crate::registry::{Named, Registry};
use crate::trace::{ForceSample, Trace};
use crate::Vec3;

pub const DEFAULT_SEGMENTS: usize = 16;
pub const CONE_TEXT_FORMAT: &str = "palpa-cones";
pub const CONE_TEXT_VERSION: u32 = 1;
/// Vertex colour of exported cones.
pub const CONE_RGB: [f64; 3] = [1.0, 0.5, 0.0];

#[derive(Debug, Error)]
pub enum ForceMapError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("unknown export format `{0}`")]
    UnknownFormat(String),
    #[error("malformed cone file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cone {
    pub apex: Vec3,
    pub axis: Vec3,
    pub height: f64,
    pub radius: f64,
    pub peak_force: f64,
    pub tap_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConeScale {
    /// Height per newton, m/N.
    pub c_h: f64,
    /// Base radius per newton, m/N.
    pub c_r: f64,
    pub segments: usize,
}

impl Default for ConeScale {
    fn default() -> Self {
        Self {
            c_h: 0.012,
            c_r: 0.004,
            segments: DEFAULT_SEGMENTS,
        }
    }
}

impl ConeScale {
    pub fn validate(&self) -> Result<(), ForceMapError> {
        if !(self.c_h > 0.0 && self.c_h.is_finite() && self.c_r > 0.0 && self.c_r.is_finite()) {
            return Err(ForceMapError::Parameter(format!(
                "c_h = {}, c_r = {} must be > 0",
                self.c_h, self.c_r
            )));
        }
        if self.segments < 3 {
            return Err(ForceMapError::Parameter(format!(
                "segments = {} must be >= 3",
                self.segments
            )));
        }
        Ok(())
    }
}

/// Cone for one tap, anchored at the sample of peak force.
pub fn cone_for_sample(sample: &ForceSample, tap_index: usize, c_h: f64, c_r: f64) -> Cone {
    let peak_force = sample.force.norm();
    Cone {
        apex: sample.proxy.unwrap_or(sample.position),
        axis: sample.orientation * Vec3::z(),
        height: c_h * peak_force,
        radius: c_r * peak_force,
        peak_force,
        tap_index,
    }
}

pub fn build_cones(trace: &Trace, taps: &[TapInterval], c_h: f64, c_r: f64) -> Result<Vec<Cone>, ForceMapError> {
    ConeScale {
        c_h,
        c_r,
        segments: DEFAULT_SEGMENTS,
    }
    .validate()?;
    taps.iter()
        .enumerate()
        .map(|(i, tap)| {
            let sample = trace.samples.get(tap.peak_sample_index).ok_or_else(|| {
                ForceMapError::Parameter(format!(
                    "tap {i} peak index {} outside trace of {} samples",
                    tap.peak_sample_index,
                    trace.len()
                ))
            })?;
            Ok(cone_for_sample(sample, i, c_h, c_r))
        })
        .collect()
}

fn orthonormal_basis(axis: &Vec3) -> (Vec3, Vec3) {
    let helper = if axis.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let u = axis.cross(&helper).normalize();
    (u, axis.cross(&u))
}

/// Cone surfaces in the mesh frame. The base sits at `apex + axis * height`.
pub fn tessellate(cones: &[Cone], segments: usize) -> TriMesh {
    let mut vertices = Vec::with_capacity(cones.len() * (segments + 1));
    let mut triangles = Vec::with_capacity(cones.len() * (2 * segments - 2));
    for cone in cones {
        let base = vertices.len();
        let (u, v) = orthonormal_basis(&cone.axis);
        let center = cone.apex + cone.axis * cone.height;
        vertices.push(cone.apex);
        for i in 0..segments {
            let a = std::f64::consts::TAU * i as f64 / segments as f64;
            vertices.push(center + (u * a.cos() + v * a.sin()) * cone.radius);
        }
        for i in 0..segments {
            let j = (i + 1) % segments;
            triangles.push([base, base + 1 + j, base + 1 + i]);
        }
        for i in 1..segments - 1 {
            triangles.push([base + 1, base + 1 + i, base + 2 + i]);
        }
    }
    let normals = crate::mesh::compute_vertex_normals(&vertices, &triangles);
    TriMesh {
        name: "force_map".into(),
        vertex_rgb: vec![CONE_RGB; vertices.len()],
        vertices,
        triangles,
        vertex_normals: normals,
    }
}

#[derive(Serialize, Deserialize)]
struct ConeFile {
    format: String,
    version: u32,
    cones: Vec<Cone>,
}

pub trait ConeExporter: Named + Send + Sync {
    fn export(&self, cones: &[Cone], segments: usize, out: &mut dyn Write) -> Result<(), ForceMapError>;
}

/// Wavefront OBJ with per-vertex colour.
pub struct MeshExporter;

impl Named for MeshExporter {
    fn name(&self) -> &'static str {
        "mesh"
    }
}

impl ConeExporter for MeshExporter {
    fn export(&self, cones: &[Cone], segments: usize, out: &mut dyn Write) -> Result<(), ForceMapError> {
        let mesh = tessellate(cones, segments);
        let mut buf = Vec::new();
        MeshFormat::Obj
            .codec()
            .encode(&mesh, &mut buf)
            .map_err(|e| ForceMapError::Format(e.to_string()))?;
        out.write_all(&buf)?;
        Ok(())
    }
}

/// Lossless JSON cone list.
pub struct TextExporter;

impl Named for TextExporter {
    fn name(&self) -> &'static str {
        "text"
    }
}

impl ConeExporter for TextExporter {
    fn export(&self, cones: &[Cone], _segments: usize, out: &mut dyn Write) -> Result<(), ForceMapError> {
        let file = ConeFile {
            format: CONE_TEXT_FORMAT.into(),
            version: CONE_TEXT_VERSION,
            cones: cones.to_vec(),
        };
        serde_json::to_writer_pretty(&mut *out, &file).map_err(|e| ForceMapError::Format(e.to_string()))?;
        writeln!(out)?;
        Ok(())
    }
}

pub fn exporter_registry() -> &'static Registry<dyn ConeExporter> {
    static REGISTRY: OnceLock<Registry<dyn ConeExporter>> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        Registry::<dyn ConeExporter>::new()
            .with(Box::new(MeshExporter))
            .with(Box::new(TextExporter))
    })
}

pub fn export_cones(cones: &[Cone], path: impl AsRef<Path>, format: &str, segments: usize) -> Result<(), ForceMapError> {
    if segments < 3 {
        return Err(ForceMapError::Parameter(format!("segments = {segments} must be >= 3")));
    }
    let exporter = exporter_registry()
        .get(format)
        .ok_or_else(|| ForceMapError::UnknownFormat(format.to_string()))?;
    let mut out = BufWriter::new(File::create(path)?);
    exporter.export(cones, segments, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn parse_cones_text(text: &str) -> Result<Vec<Cone>, ForceMapError> {
    let file: ConeFile = serde_json::from_str(text).map_err(|e| ForceMapError::Format(e.to_string()))?;
    if file.format != CONE_TEXT_FORMAT || file.version != CONE_TEXT_VERSION {
        return Err(ForceMapError::Format(format!(
            "expected {CONE_TEXT_FORMAT} v{CONE_TEXT_VERSION}, got {} v{}",
            file.format, file.version
        )));
    }
    Ok(file.cones)
}

pub fn load_cones_text(path: impl AsRef<Path>) -> Result<Vec<Cone>, ForceMapError> {
    let mut text = String::new();
    BufReader::new(File::open(path)?).read_to_string(&mut text)?;
    parse_cones_text(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assessment::segment_taps;
    use crate::mesh::load_mesh;
    use crate::synth::{scale_forces, synth_trace, Profile};
    use crate::Quat;

    fn peak_sample(force: f64) -> ForceSample {
        ForceSample {
            t: 0.0,
            position: Vec3::new(0.0, 0.0, -0.01),
            orientation: Quat::identity(),
            velocity: Vec3::zeros(),
            force: Vec3::new(0.0, 0.0, force),
            contact: true,
            penetration: 0.01,
            proxy: Some(Vec3::zeros()),
            normal: Some(Vec3::z()),
        }
    }

    #[test]
    fn cone_dimensions_are_proportional() {
        let cone = cone_for_sample(&peak_sample(2.5), 0, 0.01, 0.004);
        assert!((cone.height - 0.025).abs() < 1e-15);
        assert!((cone.radius - 0.01).abs() < 1e-15);
        assert_eq!(cone.apex, Vec3::zeros());
        assert_eq!(cone.axis, Vec3::z());
    }

    #[test]
    fn no_taps_no_cones() {
        let mut trace = synth_trace(Profile::Expert, 1, 0);
        for s in &mut trace.samples {
            s.force = Vec3::zeros();
        }
        let taps = segment_taps(&trace, 0.5, 0.2);
        assert!(build_cones(&trace, &taps, 0.012, 0.004).unwrap().is_empty());
        assert!(build_cones(&trace, &taps, 0.0, 0.004).is_err());
    }

    #[test]
    fn one_cone_per_tap_and_linear_in_force() {
        let trace = synth_trace(Profile::Novice, 6, 11);
        let taps = segment_taps(&trace, 0.5, 0.2);
        let cones = build_cones(&trace, &taps, 0.012, 0.004).unwrap();
        assert_eq!(cones.len(), taps.len());
        let doubled = scale_forces(&trace, 2.0);
        let cones2 = build_cones(&doubled, &segment_taps(&doubled, 0.5, 0.2), 0.012, 0.004).unwrap();
        for (a, b) in cones.iter().zip(&cones2) {
            assert_eq!(b.height, 2.0 * a.height);
            assert_eq!(b.radius, 2.0 * a.radius);
        }
    }

    #[test]
    fn mesh_export_counts_and_reload() {
        let cones = vec![
            cone_for_sample(&peak_sample(2.5), 0, 0.012, 0.004),
            cone_for_sample(&peak_sample(1.0), 1, 0.012, 0.004),
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cones.obj");
        export_cones(&cones, &path, "mesh", 16).unwrap();
        let mesh = load_mesh(&path, MeshFormat::Obj).unwrap();
        assert_eq!(mesh.vertex_count(), 2 * 17);
        assert_eq!(mesh.triangle_count(), 2 * 30);
        assert!(crate::mesh::validate_mesh(&mesh).is_valid());
    }

    #[test]
    fn text_export_round_trips() {
        let trace = synth_trace(Profile::Novice, 4, 2);
        let cones = build_cones(&trace, &segment_taps(&trace, 0.5, 0.2), 0.012, 0.004).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cones.json");
        export_cones(&cones, &path, "text", 16).unwrap();
        assert_eq!(load_cones_text(&path).unwrap(), cones);
        assert!(matches!(
            export_cones(&cones, &path, "svg", 16),
            Err(ForceMapError::UnknownFormat(_))
        ));
    }
}
