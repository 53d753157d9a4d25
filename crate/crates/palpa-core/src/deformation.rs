//! Localized Gaussian visual dent around a contact point.
//!
//! A vertex at distance `d` from the contact point moves inward
//! along the contact normal by `penetration * a * exp(-d² / w²)`. Penetration
//! scales the peak; `w` sets the spread. Vertices whose displacement
//! would fall below `cutoff_eps` are omitted from the sparse field.
//!
//! The dent is presentation only and never feeds back into forces.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::TriMesh;
use crate::Vec3;

#[derive(Debug, Error, PartialEq)]
pub enum DomainError {
    #[error("kernel width must be > 0, got {0}")]
    Width(f64),
    #[error("amplitude must be > 0, got {0}")]
    Amplitude(f64),
    #[error("cutoff must be >= 0, got {0}")]
    Cutoff(f64),
    #[error("distance must be finite and >= 0, got {0}")]
    Distance(f64),
    #[error("penetration must be finite and >= 0, got {0}")]
    Penetration(f64),
    #[error("contact normal must be unit length (|n| = {0})")]
    Normal(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    /// Gain on penetration depth at the kernel peak.
    pub amplitude: f64,
    /// Kernel width, meters.
    pub width: f64,
    /// Displacement floor for sparse evaluation, meters.
    pub cutoff_eps: f64,
}

impl Default for KernelParams {
    fn default() -> Self {
        Self {
            amplitude: 1.0,
            width: 0.02,
            cutoff_eps: 1e-5,
        }
    }
}

impl KernelParams {
    pub fn validate(&self) -> Result<(), DomainError> {
        if !(self.amplitude > 0.0) || !self.amplitude.is_finite() {
            return Err(DomainError::Amplitude(self.amplitude));
        }
        if !(self.width > 0.0) || !self.width.is_finite() {
            return Err(DomainError::Width(self.width));
        }
        if !(self.cutoff_eps >= 0.0) {
            return Err(DomainError::Cutoff(self.cutoff_eps));
        }
        Ok(())
    }

    /// Lateral radius beyond which the displacement drops under `cutoff_eps`,
    /// or `None` when the whole field is below it.
    pub fn cutoff_radius(&self, penetration: f64) -> Option<f64> {
        let peak = self.amplitude * penetration;
        if !(peak >= self.cutoff_eps) || peak == 0.0 {
            return None;
        }
        if self.cutoff_eps == 0.0 {
            return Some(f64::INFINITY);
        }
        Some(self.width * (peak / self.cutoff_eps).ln().sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisplacementQuery {
    pub contact_point: Vec3,
    /// Outward unit surface normal at the contact.
    pub contact_normal: Vec3,
    /// Penetration depth, meters.
    pub penetration: f64,
    pub params: KernelParams,
}

impl DisplacementQuery {
    pub fn validate(&self) -> Result<(), DomainError> {
        self.params.validate()?;
        if !(self.penetration >= 0.0) || !self.penetration.is_finite() {
            return Err(DomainError::Penetration(self.penetration));
        }
        let len = self.contact_normal.norm();
        if !((len - 1.0).abs() <= 1e-6) {
            return Err(DomainError::Normal(len));
        }
        Ok(())
    }

    /// Displacement magnitude at distance `d`.
    pub fn magnitude(&self, d: f64) -> f64 {
        self.penetration * self.params.amplitude * (-(d * d) / (self.params.width * self.params.width)).exp()
    }

    fn displacement(&self, d: f64) -> Option<Vec3> {
        let m = self.magnitude(d);
        (m >= self.params.cutoff_eps && m > 0.0).then(|| -self.contact_normal * m)
    }
}

/// `a * exp(-d² / w²)`.
pub fn gauss_kernel(d: f64, a: f64, w: f64) -> Result<f64, DomainError> {
    if !(w > 0.0) || !w.is_finite() {
        return Err(DomainError::Width(w));
    }
    if !(d >= 0.0) || !d.is_finite() {
        return Err(DomainError::Distance(d));
    }
    Ok(a * (-(d * d) / (w * w)).exp())
}

/// Sparse displacement per vertex index, ordered by index.
pub type DisplacementField = BTreeMap<usize, Vec3>;

/// Linear scan over every vertex.
pub fn displacement_field(
    mesh: &TriMesh,
    query: &DisplacementQuery,
) -> Result<DisplacementField, DomainError> {
    query.validate()?;
    let Some(r_cut) = query.params.cutoff_radius(query.penetration) else {
        return Ok(DisplacementField::new());
    };
    let reach = pad(r_cut);
    Ok(mesh
        .vertices
        .iter()
        .enumerate()
        .filter_map(|(i, v)| {
            let d = (v - query.contact_point).norm();
            if d > reach {
                return None;
            }
            query.displacement(d).map(|disp| (i, disp))
        })
        .collect())
}

// Rounding in r_cut must never exclude a vertex whose magnitude clears the floor;
// the final inclusion test is on the magnitude itself.
fn pad(r: f64) -> f64 {
    r * (1.0 + 1e-9) + 1e-12
}

/// Uniform-grid vertex index for repeated dent queries on one mesh.
pub struct Deformer<'a> {
    mesh: &'a TriMesh,
    cell: f64,
    origin: Vec3,
    cells: HashMap<[i64; 3], Vec<usize>>,
}

impl<'a> Deformer<'a> {
    pub fn new(mesh: &'a TriMesh, cell: f64) -> Self {
        assert!(cell > 0.0, "cell size must be positive");
        let (origin, _) = mesh.bounds();
        let mut cells: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        for (i, v) in mesh.vertices.iter().enumerate() {
            cells.entry(Self::key(origin, cell, v)).or_default().push(i);
        }
        Self {
            mesh,
            cell,
            origin,
            cells,
        }
    }

    fn key(origin: Vec3, cell: f64, p: &Vec3) -> [i64; 3] {
        let q = (p - origin) / cell;
        [q.x.floor() as i64, q.y.floor() as i64, q.z.floor() as i64]
    }

    pub fn field(&self, query: &DisplacementQuery) -> Result<DisplacementField, DomainError> {
        query.validate()?;
        let Some(r_cut) = query.params.cutoff_radius(query.penetration) else {
            return Ok(DisplacementField::new());
        };
        if !r_cut.is_finite() {
            return displacement_field(self.mesh, query);
        }
        let reach = pad(r_cut);
        let lo = Self::key(self.origin, self.cell, &(query.contact_point - Vec3::repeat(reach)));
        let hi = Self::key(self.origin, self.cell, &(query.contact_point + Vec3::repeat(reach)));
        let mut out = DisplacementField::new();
        for x in lo[0]..=hi[0] {
            for y in lo[1]..=hi[1] {
                for z in lo[2]..=hi[2] {
                    let Some(bucket) = self.cells.get(&[x, y, z]) else {
                        continue;
                    };
                    for &i in bucket {
                        let d = (self.mesh.vertices[i] - query.contact_point).norm();
                        if d > reach {
                            continue;
                        }
                        if let Some(disp) = query.displacement(d) {
                            out.insert(i, disp);
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}
