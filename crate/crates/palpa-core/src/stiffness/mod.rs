//! Vertex RGB codes interpreted as material parameters.
//!
//! Channel R maps affinely onto stiffness `[k_min, k_max]` (N/m), channel G
//! onto damping `[b_min, b_max]` (N·s/m). Channel B is reserved and
//! ignored. Darker red therefore means softer tissue.

mod noise;
mod recipe;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::TriMesh;
use crate::Vec3;

pub use noise::value_noise;
pub use recipe::{
    recipe_registry, MapRecipe, NodularRecipe, RadialSpotRecipe, RecipeStep, UniformRecipe,
};

/// Tolerance on barycentric coordinates summing to one.
pub const BARY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum StiffnessError {
    #[error("invalid barycentric coordinates {0:?}")]
    InvalidBarycentric([f64; 3]),
    #[error("triangle {0} out of range")]
    TriangleOutOfRange(usize),
    #[error("value out of range: {0}")]
    Range(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialRange {
    pub k_min: f64,
    pub k_max: f64,
    pub b_min: f64,
    pub b_max: f64,
}

impl Default for MaterialRange {
    fn default() -> Self {
        Self {
            k_min: 50.0,
            k_max: 400.0,
            b_min: 0.0,
            b_max: 2.0,
        }
    }
}

impl MaterialRange {
    pub fn new(k_min: f64, k_max: f64, b_min: f64, b_max: f64) -> Result<Self, StiffnessError> {
        let range = Self {
            k_min,
            k_max,
            b_min,
            b_max,
        };
        range.validate()?;
        Ok(range)
    }

    pub fn validate(&self) -> Result<(), StiffnessError> {
        let ok = |lo: f64, hi: f64| lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi;
        if !ok(self.k_min, self.k_max) {
            return Err(StiffnessError::Range(format!(
                "stiffness bounds [{}, {}]",
                self.k_min, self.k_max
            )));
        }
        if !ok(self.b_min, self.b_max) {
            return Err(StiffnessError::Range(format!(
                "damping bounds [{}, {}]",
                self.b_min, self.b_max
            )));
        }
        Ok(())
    }

    /// Maps normalized red/green codes onto stiffness and damping.
    pub fn map(&self, r: f64, g: f64) -> MaterialPoint {
        MaterialPoint {
            k: self.k_min + r * (self.k_max - self.k_min),
            b: self.b_min + g * (self.b_max - self.b_min),
        }
    }

    /// Inverse of the stiffness half of [`MaterialRange::map`].
    pub fn red_for_stiffness(&self, k: f64) -> f64 {
        (k - self.k_min) / (self.k_max - self.k_min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialPoint {
    /// Stiffness, N/m.
    pub k: f64,
    /// Damping, N·s/m.
    pub b: f64,
}

/// Barycentric coordinates over a triangle's three vertices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Barycentric(pub [f64; 3]);

impl Barycentric {
    pub fn new(w: [f64; 3]) -> Result<Self, StiffnessError> {
        let sum: f64 = w.iter().sum();
        if w.iter().any(|c| !(*c >= 0.0)) || (sum - 1.0).abs() > BARY_TOLERANCE {
            return Err(StiffnessError::InvalidBarycentric(w));
        }
        Ok(Self(w))
    }

    pub fn vertex(i: usize) -> Self {
        let mut w = [0.0; 3];
        w[i] = 1.0;
        Self(w)
    }

    pub fn centroid() -> Self {
        Self([1.0 / 3.0; 3])
    }

    pub fn interpolate(&self, values: [f64; 3]) -> f64 {
        self.0[0] * values[0] + self.0[1] * values[1] + self.0[2] * values[2]
    }

    pub fn point(&self, corners: [Vec3; 3]) -> Vec3 {
        corners[0] * self.0[0] + corners[1] * self.0[1] + corners[2] * self.0[2]
    }
}

/// Samples stiffness and damping at a surface point given in barycentric form.
pub fn material_at(
    mesh: &TriMesh,
    range: &MaterialRange,
    triangle: usize,
    bary: Barycentric,
) -> Result<MaterialPoint, StiffnessError> {
    let bary = Barycentric::new(bary.0)?;
    let tri = mesh
        .triangles
        .get(triangle)
        .ok_or(StiffnessError::TriangleOutOfRange(triangle))?;
    let channel = |c: usize| tri.map(|v| mesh.vertex_rgb[v][c]);
    let r = bary.interpolate(channel(0));
    let g = bary.interpolate(channel(1));
    Ok(range.map(r, g))
}

fn check_unit(name: &str, v: f64) -> Result<(), StiffnessError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(StiffnessError::Range(format!("{name} = {v} outside [0, 1]")))
    }
}

/// Every vertex gets `(r, g, 0)`.
pub fn bake_uniform(mesh: &TriMesh, r: f64, g: f64) -> Result<TriMesh, StiffnessError> {
    check_unit("r", r)?;
    check_unit("g", g)?;
    Ok(mesh.with_rgb(vec![[r, g, 0.0]; mesh.vertex_count()]))
}

/// Hermite smoothstep on `[0, 1]`.
pub fn smoothstep(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * (3.0 - 2.0 * x)
}

/// Blends red/green toward `(inner_r, inner_g)` inside a Euclidean ball.
///
/// A vertex at distance `d < radius` from `center` becomes
/// `inner + smoothstep(d / radius) * (existing - inner)`.
pub fn bake_radial_spot(
    mesh: &TriMesh,
    center: Vec3,
    radius: f64,
    inner_r: f64,
    inner_g: f64,
) -> Result<TriMesh, StiffnessError> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(StiffnessError::Range(format!("radius = {radius} must be > 0")));
    }
    check_unit("inner_r", inner_r)?;
    check_unit("inner_g", inner_g)?;
    let rgb = mesh
        .vertices
        .iter()
        .zip(&mesh.vertex_rgb)
        .map(|(v, &[r, g, b])| {
            let d = (v - center).norm();
            if d >= radius {
                return [r, g, b];
            }
            let s = smoothstep(d / radius);
            [inner_r + s * (r - inner_r), inner_g + s * (g - inner_g), b]
        })
        .collect();
    Ok(mesh.with_rgb(rgb))
}

/// Perturbs red with seeded value noise: `base_r + amplitude * noise(p / scale)`.
pub fn bake_nodular(
    mesh: &TriMesh,
    base_r: f64,
    noise_amplitude: f64,
    noise_scale: f64,
    seed: u64,
) -> Result<TriMesh, StiffnessError> {
    if !(noise_amplitude >= 0.0) {
        return Err(StiffnessError::Range(format!(
            "noise amplitude {noise_amplitude} must be >= 0"
        )));
    }
    if !(noise_scale > 0.0) || !noise_scale.is_finite() {
        return Err(StiffnessError::Range(format!(
            "noise scale {noise_scale} must be > 0"
        )));
    }
    check_unit("base_r - amplitude", base_r - noise_amplitude)?;
    check_unit("base_r + amplitude", base_r + noise_amplitude)?;
    let rgb = mesh
        .vertices
        .iter()
        .zip(&mesh.vertex_rgb)
        .map(|(v, &[_, g, b])| {
            let r = base_r + noise_amplitude * value_noise(v / noise_scale, seed);
            [r.clamp(0.0, 1.0), g, b]
        })
        .collect();
    Ok(mesh.with_rgb(rgb))
}
