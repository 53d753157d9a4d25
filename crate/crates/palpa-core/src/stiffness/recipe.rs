//! Config-driven map generators.
//!
//! A preset's material map is a chain of [`RecipeStep`]s; each step names a
//! [`MapRecipe`] in the registry and carries its parameters as a TOML table.

use std::sync::OnceLock;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{bake_nodular, bake_radial_spot, bake_uniform, StiffnessError};
use crate::mesh::TriMesh;
use crate::registry::{Named, Registry};
use crate::Vec3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecipeStep {
    pub kind: String,
    #[serde(flatten)]
    pub params: toml::Table,
}

impl RecipeStep {
    pub fn new(kind: &str, params: toml::Table) -> Self {
        Self {
            kind: kind.to_string(),
            params,
        }
    }

    pub fn apply(&self, mesh: &TriMesh) -> Result<TriMesh, StiffnessError> {
        let recipe = recipe_registry()
            .get(&self.kind)
            .ok_or_else(|| StiffnessError::Range(format!("unknown recipe `{}`", self.kind)))?;
        recipe.bake(mesh, &self.params)
    }
}

pub trait MapRecipe: Named + Send + Sync {
    fn bake(&self, mesh: &TriMesh, params: &toml::Table) -> Result<TriMesh, StiffnessError>;
}

pub fn recipe_registry() -> &'static Registry<dyn MapRecipe> {
    static REGISTRY: OnceLock<Registry<dyn MapRecipe>> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        Registry::<dyn MapRecipe>::new()
            .with(Box::new(UniformRecipe))
            .with(Box::new(RadialSpotRecipe))
            .with(Box::new(NodularRecipe))
    })
}

fn params<T: DeserializeOwned>(kind: &str, table: &toml::Table) -> Result<T, StiffnessError> {
    toml::Value::Table(table.clone())
        .try_into()
        .map_err(|e| StiffnessError::Range(format!("{kind} parameters: {e}")))
}

pub struct UniformRecipe;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct UniformParams {
    r: f64,
    g: f64,
}

impl Named for UniformRecipe {
    fn name(&self) -> &'static str {
        "uniform"
    }
}

impl MapRecipe for UniformRecipe {
    fn bake(&self, mesh: &TriMesh, table: &toml::Table) -> Result<TriMesh, StiffnessError> {
        let p: UniformParams = params(self.name(), table)?;
        bake_uniform(mesh, p.r, p.g)
    }
}

pub struct RadialSpotRecipe;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RadialSpotParams {
    center: [f64; 3],
    radius: f64,
    inner_r: f64,
    inner_g: f64,
}

impl Named for RadialSpotRecipe {
    fn name(&self) -> &'static str {
        "radial_spot"
    }
}

impl MapRecipe for RadialSpotRecipe {
    fn bake(&self, mesh: &TriMesh, table: &toml::Table) -> Result<TriMesh, StiffnessError> {
        let p: RadialSpotParams = params(self.name(), table)?;
        bake_radial_spot(mesh, Vec3::from(p.center), p.radius, p.inner_r, p.inner_g)
    }
}

pub struct NodularRecipe;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NodularParams {
    base_r: f64,
    amplitude: f64,
    scale: f64,
    seed: u64,
}

impl Named for NodularRecipe {
    fn name(&self) -> &'static str {
        "nodular"
    }
}

impl MapRecipe for NodularRecipe {
    fn bake(&self, mesh: &TriMesh, table: &toml::Table) -> Result<TriMesh, StiffnessError> {
        let p: NodularParams = params(self.name(), table)?;
        bake_nodular(mesh, p.base_r, p.amplitude, p.scale, p.seed)
    }
}
