use std::path::Path;
use std::sync::OnceLock;

use super::{MeshError, ObjCodec, PlyCodec, TriMesh};
use crate::registry::{Named, Registry};
use crate::Vec3;

/// Decoded mesh data before invariant checks.
#[derive(Debug, Clone, Default)]
pub struct RawMesh {
    pub name: Option<String>,
    pub positions: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
    /// Normalized colors, one per position when present.
    pub colors: Vec<[f64; 3]>,
    pub normals: Option<Vec<Vec3>>,
}

impl RawMesh {
    pub fn into_mesh(self, fallback_name: &str) -> Result<TriMesh, MeshError> {
        if self.colors.len() != self.positions.len() {
            return Err(MeshError::Material(format!(
                "vertex colors missing: {} colors for {} vertices",
                self.colors.len(),
                self.positions.len()
            )));
        }
        let name = self.name.unwrap_or_else(|| fallback_name.to_string());
        TriMesh::new(name, self.positions, self.triangles, self.colors, self.normals)
    }
}

/// A mesh file format.
pub trait MeshCodec: Named + Send + Sync {
    fn extensions(&self) -> &'static [&'static str];
    fn decode(&self, bytes: &[u8]) -> Result<RawMesh, MeshError>;
    fn encode(&self, mesh: &TriMesh, out: &mut Vec<u8>) -> Result<(), MeshError>;
}

pub fn codec_registry() -> &'static Registry<dyn MeshCodec> {
    static REGISTRY: OnceLock<Registry<dyn MeshCodec>> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        Registry::<dyn MeshCodec>::new()
            .with(Box::new(ObjCodec))
            .with(Box::new(PlyCodec))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    /// Wavefront OBJ with `v x y z r g b` vertex colors.
    Obj,
    /// Stanford PLY (ascii or binary) with red/green/blue vertex properties.
    Ply,
}

impl MeshFormat {
    pub fn name(self) -> &'static str {
        match self {
            MeshFormat::Obj => "obj",
            MeshFormat::Ply => "ply",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "obj" => Some(MeshFormat::Obj),
            "ply" => Some(MeshFormat::Ply),
            _ => None,
        }
    }

    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        codec_registry()
            .names()
            .into_iter()
            .filter_map(|n| codec_registry().get(n))
            .find(|c| c.extensions().contains(&ext.as_str()))
            .and_then(|c| Self::from_name(c.name()))
    }

    pub fn codec(self) -> &'static dyn MeshCodec {
        codec_registry()
            .get(self.name())
            .expect("built-in codec registered")
    }
}
