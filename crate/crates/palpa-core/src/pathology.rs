//! Named liver presets: a mesh asset, a material-map recipe chain and kernel
//! parameters, read from `presets.toml` in the asset root.
//!
//! ```toml
//! version = 1
//!
//! [[preset]]
//! name = "cyst"
//! mesh = "liver_3k"
//! description = "..."
//! kernel = { amplitude = 1.0, width = 0.02, cutoff_eps = 1e-5 }
//! [[preset.recipe]]
//! kind = "uniform"
//! r = 0.8
//! g = 0.5
//! [[preset.recipe]]
//! kind = "radial_spot"
//! center = [0.06, 0.046, 0.0]
//! radius = 0.025
//! inner_r = 0.1
//! inner_g = 0.5
//! ```
//!
//! `material` is optional and defaults to the standard range.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::deformation::KernelParams;
use crate::mesh::{load_mesh, validate_mesh, MeshError, MeshFormat, TriMesh};
use crate::stiffness::RecipeStep;
use crate::stiffness::{MaterialRange, StiffnessError};

pub const ASSETS_ENV: &str = "PALPA_ASSETS";
pub const PRESETS_FILE: &str = "presets.toml";
pub const PRESETS_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PathologyError {
    #[error("unknown preset `{name}` (known: {known})")]
    UnknownPreset { name: String, known: String },
    #[error("asset not found: {0}")]
    Asset(String),
    #[error("mesh asset `{id}`: {source}")]
    Mesh { id: String, source: MeshError },
    #[error("preset `{name}`: {source}")]
    Recipe { name: String, source: StiffnessError },
    #[error("preset file: {0}")]
    Config(String),
}

/// Directory holding meshes and `presets.toml`.
#[derive(Debug, Clone, PartialEq)]
pub struct AssetStore {
    root: PathBuf,
}

impl AssetStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    /// `$PALPA_ASSETS`, else the `assets/` directory of the source tree.
    pub fn from_env() -> Self {
        match std::env::var_os(ASSETS_ENV) {
            Some(dir) if !dir.is_empty() => Self::new(dir),
            _ => Self::new(Self::bundled_root()),
        }
    }

    pub fn bundled_root() -> PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../assets")
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Path of mesh `id`: `<root>/<id>.obj` or `<root>/<id>.ply`.
    pub fn mesh_path(&self, id: &str) -> Result<(PathBuf, MeshFormat), PathologyError> {
        if id.is_empty() || id.contains(['/', '\\']) || id.starts_with('.') {
            return Err(PathologyError::Asset(format!("invalid mesh id `{id}`")));
        }
        [MeshFormat::Obj, MeshFormat::Ply]
            .into_iter()
            .map(|f| (self.root.join(format!("{id}.{}", f.name())), f))
            .find(|(p, _)| p.is_file())
            .ok_or_else(|| PathologyError::Asset(format!("mesh `{id}` under {}", self.root.display())))
    }

    pub fn load_mesh(&self, id: &str) -> Result<TriMesh, PathologyError> {
        let (path, format) = self.mesh_path(id)?;
        let mut mesh = load_mesh(&path, format).map_err(|source| PathologyError::Mesh {
            id: id.to_string(),
            source,
        })?;
        mesh.name = id.to_string();
        Ok(mesh)
    }

    pub fn presets_path(&self) -> PathBuf {
        self.root.join(PRESETS_FILE)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathologyPreset {
    pub name: String,
    pub mesh: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub material: MaterialRange,
    #[serde(default)]
    pub kernel: KernelParams,
    pub recipe: Vec<RecipeStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PresetFile {
    version: u32,
    #[serde(rename = "preset", default)]
    presets: Vec<PathologyPreset>,
}

/// A baked preset ready for the servo.
#[derive(Debug, Clone)]
pub struct PresetInstance {
    pub preset: PathologyPreset,
    pub mesh: Arc<TriMesh>,
    pub material: MaterialRange,
    pub kernel: KernelParams,
}

#[derive(Debug, Clone)]
pub struct PresetLibrary {
    store: AssetStore,
    presets: Vec<PathologyPreset>,
}

impl PresetLibrary {
    pub fn load(store: AssetStore) -> Result<Self, PathologyError> {
        let path = store.presets_path();
        let text = std::fs::read_to_string(&path)
            .map_err(|e| PathologyError::Asset(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(store, &text)
    }

    pub fn from_env() -> Result<Self, PathologyError> {
        Self::load(AssetStore::from_env())
    }

    pub fn from_toml_str(store: AssetStore, text: &str) -> Result<Self, PathologyError> {
        let file: PresetFile = toml::from_str(text).map_err(|e| PathologyError::Config(e.to_string()))?;
        if file.version != PRESETS_VERSION {
            return Err(PathologyError::Config(format!(
                "unsupported preset file version {}",
                file.version
            )));
        }
        for (i, p) in file.presets.iter().enumerate() {
            if file.presets[..i].iter().any(|q| q.name.eq_ignore_ascii_case(&p.name)) {
                return Err(PathologyError::Config(format!("duplicate preset `{}`", p.name)));
            }
            let bad = |e: String| PathologyError::Config(format!("preset `{}`: {e}", p.name));
            p.material.validate().map_err(|e| bad(e.to_string()))?;
            p.kernel.validate().map_err(|e| bad(e.to_string()))?;
            if p.recipe.is_empty() {
                return Err(bad("empty recipe".into()));
            }
        }
        Ok(Self {
            store,
            presets: file.presets,
        })
    }

    pub fn store(&self) -> &AssetStore {
        &self.store
    }

    pub fn names(&self) -> Vec<&str> {
        self.presets.iter().map(|p| p.name.as_str()).collect()
    }

    pub fn presets(&self) -> &[PathologyPreset] {
        &self.presets
    }

    pub fn get(&self, name: &str) -> Result<&PathologyPreset, PathologyError> {
        self.presets
            .iter()
            .find(|p| p.name.eq_ignore_ascii_case(name))
            .ok_or_else(|| PathologyError::UnknownPreset {
                name: name.to_string(),
                known: self.names().join(", "),
            })
    }

    /// Loads the mesh and applies the recipe chain in order.
    pub fn instantiate(&self, name: &str) -> Result<PresetInstance, PathologyError> {
        let preset = self.get(name)?.clone();
        let mut mesh = self.store.load_mesh(&preset.mesh)?;
        for step in &preset.recipe {
            mesh = step.apply(&mesh).map_err(|source| PathologyError::Recipe {
                name: preset.name.clone(),
                source,
            })?;
        }
        let report = validate_mesh(&mesh);
        if !report.is_valid() {
            return Err(PathologyError::Mesh {
                id: preset.mesh.clone(),
                source: MeshError::Geometry(format!("{:?}", report.violations)),
            });
        }
        Ok(PresetInstance {
            material: preset.material,
            kernel: preset.kernel,
            mesh: Arc::new(mesh),
            preset,
        })
    }
}

pub fn list_presets() -> Result<Vec<String>, PathologyError> {
    Ok(PresetLibrary::from_env()?
        .names()
        .into_iter()
        .map(str::to_string)
        .collect())
}

pub fn instantiate(name: &str) -> Result<PresetInstance, PathologyError> {
    PresetLibrary::from_env()?.instantiate(name)
}
