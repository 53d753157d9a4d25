//! Virtual palpation engine.
//!
//! Soft-tissue haptics on triangle meshes whose per-vertex RGB channels
//! encode stiffness and damping: surface-proxy contact, spring/damper
//! reaction forces in a fixed 1 kHz servo step, Gaussian visual dents,
//! 100 Hz session traces with deterministic replay, tap segmentation and
//! expert/novice assessment, and cone force maps.

pub mod assessment;
pub mod config;
pub mod deformation;
pub mod force_map;
pub mod haptic;
pub mod mesh;
pub mod pathology;
pub mod recorder;
pub mod registry;
pub mod stiffness;
pub mod synth;
pub mod trace;

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Quat = nalgebra::UnitQuaternion<f64>;

pub use haptic::{ContactState, HapticScene, ServoOutput, ToolState, SERVO_DT};
pub use mesh::{load_mesh, validate_mesh, MeshError, MeshFormat, TriMesh};
pub use stiffness::{material_at, Barycentric, MaterialPoint, MaterialRange};
