//! Point-tool contact against a tissue surface and the 1 kHz servo step.
//!
//! The tool tip is a point. When it is inside the surface, the proxy is the
//! nearest surface point and penetration is the tip-to-proxy distance. The
//! reaction force is a spring on penetration plus viscous damping on the
//! normal velocity, clamped so the surface never pulls:
//!
//! `F = max(0, k·Δx + b·v_in) · n̂`, with `v_in` the tool speed into the surface.
//!
//! Stiffness `k` and damping `b` are sampled from the mesh's RGB map at the
//! proxy.

pub mod geometry;
mod resolver;
mod surface;

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::mesh::TriMesh;
use crate::stiffness::{material_at, Barycentric, MaterialPoint, MaterialRange};
use crate::{Quat, Vec3};

pub use resolver::{resolver_registry, BruteForceResolver, ContactResolver, ProxyResolver};
pub use surface::{Surface, SurfaceHit};

/// Fixed servo period, seconds.
pub const SERVO_DT: f64 = 0.001;
/// Servo rate, Hz.
pub const SERVO_HZ: u64 = 1000;
/// Tool points within this distance of the surface count as touching it.
pub const SURFACE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToolState {
    pub t: f64,
    pub position: Vec3,
    pub orientation: Quat,
    pub velocity: Vec3,
}

impl ToolState {
    pub fn at_rest(t: f64, position: Vec3) -> Self {
        Self {
            t,
            position,
            orientation: Quat::identity(),
            velocity: Vec3::zeros(),
        }
    }

    /// Linear position/velocity and spherical orientation interpolation.
    /// `s = 0` returns `a` exactly and `s = 1` returns `b` exactly.
    pub fn interpolate(a: &ToolState, b: &ToolState, s: f64, t: f64) -> ToolState {
        if s == 0.0 {
            return ToolState { t, ..*a };
        }
        if s == 1.0 {
            return ToolState { t, ..*b };
        }
        ToolState {
            t,
            position: a.position + (b.position - a.position) * s,
            orientation: slerp(&a.orientation, &b.orientation, s),
            velocity: a.velocity + (b.velocity - a.velocity) * s,
        }
    }
}

pub fn slerp(a: &Quat, b: &Quat, s: f64) -> Quat {
    a.try_slerp(b, s, 1e-12).unwrap_or(*a)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactState {
    pub triangle: usize,
    pub bary: Barycentric,
    /// Surface point nearest the tool tip.
    pub proxy: Vec3,
    /// Outward unit normal; the reaction force points along it.
    pub normal: Vec3,
    /// Tip-to-proxy distance, meters.
    pub penetration: f64,
    pub material: MaterialPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServoOutput {
    pub force: Vec3,
    pub contact: Option<ContactState>,
    /// Measured wall time of the step, seconds. Excluded from determinism checks.
    pub step_duration: f64,
}

impl ServoOutput {
    pub fn free() -> Self {
        Self {
            force: Vec3::zeros(),
            contact: None,
            step_duration: 0.0,
        }
    }

    /// Equality on everything except the measured step time.
    pub fn same_result(&self, other: &ServoOutput) -> bool {
        self.force == other.force && self.contact == other.contact
    }
}

/// Spring/damper reaction force for a resolved contact.
pub fn compute_force(contact: &ContactState, tool_velocity: &Vec3) -> Vec3 {
    if contact.penetration <= 0.0 {
        return Vec3::zeros();
    }
    let inward_speed = -tool_velocity.dot(&contact.normal);
    let magnitude = contact.material.k * contact.penetration + contact.material.b * inward_speed;
    contact.normal * magnitude.max(0.0)
}

/// Everything the servo needs for one mesh: the query structure, the
/// material range and the selected contact strategy.
pub struct HapticScene {
    surface: Surface,
    range: MaterialRange,
    resolver: &'static dyn ContactResolver,
}

impl HapticScene {
    pub fn new(mesh: Arc<TriMesh>, range: MaterialRange) -> Self {
        Self::with_resolver(mesh, range, &ProxyResolver)
    }

    pub fn with_resolver(
        mesh: Arc<TriMesh>,
        range: MaterialRange,
        resolver: &'static dyn ContactResolver,
    ) -> Self {
        Self {
            surface: Surface::new(mesh),
            range,
            resolver,
        }
    }

    pub fn mesh(&self) -> &TriMesh {
        self.surface.mesh()
    }

    pub fn mesh_arc(&self) -> &Arc<TriMesh> {
        self.surface.mesh_arc()
    }

    pub fn surface(&self) -> &Surface {
        &self.surface
    }

    pub fn range(&self) -> &MaterialRange {
        &self.range
    }

    pub fn resolver_name(&self) -> &'static str {
        self.resolver.name()
    }

    /// `None` when the tool is outside the surface.
    pub fn resolve_contact(
        &self,
        tool_position: &Vec3,
        previous: Option<&ContactState>,
    ) -> Option<ContactState> {
        let hit = self
            .resolver
            .nearest(&self.surface, tool_position, previous.map(|c| c.triangle));
        let distance = hit.distance2.sqrt();
        let outward = self.surface.pseudo_normal(&hit);
        let (penetration, normal) = if distance <= SURFACE_EPS {
            (0.0, outward)
        } else if (tool_position - hit.point).dot(&outward) < 0.0 {
            (distance, (hit.point - tool_position) / distance)
        } else {
            return None;
        };
        let bary = Barycentric(hit.bary);
        let material = material_at(self.surface.mesh(), &self.range, hit.triangle, bary)
            .expect("surface hits carry valid barycentrics");
        Some(ContactState {
            triangle: hit.triangle,
            bary,
            proxy: hit.point,
            normal,
            penetration,
            material,
        })
    }

    /// One fixed-step servo evaluation (period [`SERVO_DT`]).
    pub fn servo_step(&self, tool: &ToolState, previous: Option<&ContactState>) -> ServoOutput {
        let started = Instant::now();
        let contact = self.resolve_contact(&tool.position, previous);
        let force = contact
            .as_ref()
            .map(|c| compute_force(c, &tool.velocity))
            .unwrap_or_else(Vec3::zeros);
        ServoOutput {
            force,
            contact,
            step_duration: started.elapsed().as_secs_f64(),
        }
    }

    /// Runs the servo over a tool-state sequence, chaining contacts.
    pub fn run(&self, tools: &[ToolState]) -> Vec<ServoOutput> {
        let mut previous: Option<ContactState> = None;
        tools
            .iter()
            .map(|tool| {
                let out = self.servo_step(tool, previous.as_ref());
                previous = out.contact;
                out
            })
            .collect()
    }
}
