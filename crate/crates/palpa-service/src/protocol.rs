//! Wire messages. Every WebSocket text frame carries one JSON object with a
//! `type` tag. Vectors are `[x, y, z]`, quaternions `[w, x, y, z]`.

use serde::{Deserialize, Serialize};

use palpa_core::assessment::{AssessmentReport, BandConfig, GaugeStatus};
use palpa_core::deformation::{DisplacementQuery, KernelParams};
use palpa_core::force_map::Cone;
use palpa_core::Vec3;

pub const PROTOCOL_VERSION: u32 = 1;
/// Largest accepted client frame, bytes.
pub const MAX_FRAME_BYTES: usize = 64 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "u16", try_from = "u16")]
pub enum ErrorCode {
    UnsupportedVersion,
    Malformed,
    UnexpectedMessage,
    UnknownPreset,
    FrameTooLarge,
    NonMonotonicTime,
    Internal,
}

impl ErrorCode {
    pub fn code(self) -> u16 {
        match self {
            ErrorCode::UnsupportedVersion => 1001,
            ErrorCode::Malformed => 1002,
            ErrorCode::UnexpectedMessage => 1003,
            ErrorCode::UnknownPreset => 1004,
            ErrorCode::FrameTooLarge => 1005,
            ErrorCode::NonMonotonicTime => 1006,
            ErrorCode::Internal => 1500,
        }
    }

    /// Fatal errors end the connection.
    pub fn is_fatal(self) -> bool {
        matches!(
            self,
            ErrorCode::UnsupportedVersion | ErrorCode::FrameTooLarge | ErrorCode::Internal
        )
    }
}

impl From<ErrorCode> for u16 {
    fn from(code: ErrorCode) -> u16 {
        code.code()
    }
}

impl TryFrom<u16> for ErrorCode {
    type Error = String;

    fn try_from(v: u16) -> Result<Self, String> {
        [
            ErrorCode::UnsupportedVersion,
            ErrorCode::Malformed,
            ErrorCode::UnexpectedMessage,
            ErrorCode::UnknownPreset,
            ErrorCode::FrameTooLarge,
            ErrorCode::NonMonotonicTime,
            ErrorCode::Internal,
        ]
        .into_iter()
        .find(|c| c.code() == v)
        .ok_or_else(|| format!("unknown error code {v}"))
    }
}

fn identity() -> [f64; 4] {
    [1.0, 0.0, 0.0, 0.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMessage {
    Hello {
        version: u32,
        preset: String,
    },
    Pose {
        /// Client clock, seconds; must increase.
        t: f64,
        position: [f64; 3],
        #[serde(default = "identity")]
        orientation: [f64; 4],
        #[serde(default)]
        button: bool,
    },
    /// Hold the last pose for `duration` seconds of simulated time.
    Idle {
        duration: f64,
    },
    /// Render geometry of a preset (the session's preset when omitted).
    FetchMesh {
        #[serde(default)]
        preset: Option<String>,
    },
    Bye,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactInfo {
    pub point: Vec3,
    pub normal: Vec3,
    pub penetration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateMessage {
    /// Simulated session time, seconds since the first pose.
    pub t: f64,
    pub contact: Option<ContactInfo>,
    pub force: Vec3,
    pub force_magnitude: f64,
    pub gauge: GaugeStatus,
    /// Cones completed since the previous state message.
    pub cones: Vec<Cone>,
    pub deformation: Option<DisplacementQuery>,
}

/// Geometry for display only. Material colours are withheld so a soft
/// region can only be found by touch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshPayload {
    pub preset: String,
    pub name: String,
    pub vertices: Vec<[f64; 3]>,
    pub normals: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Welcome {
        version: u32,
        preset: String,
        servo_hz: u64,
        publish_hz: f64,
        band: BandConfig,
        kernel: KernelParams,
    },
    State(StateMessage),
    Mesh(MeshPayload),
    Report {
        samples: usize,
        report: AssessmentReport,
        cones: Vec<Cone>,
    },
    Error {
        code: ErrorCode,
        reason: String,
    },
}

impl ServerMessage {
    pub fn error(code: ErrorCode, reason: impl Into<String>) -> Self {
        ServerMessage::Error {
            code,
            reason: reason.into(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server messages serialize")
    }
}
