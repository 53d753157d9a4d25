//! Scripted tool gestures for headless sessions.
//!
//! One event per line; `#` starts a comment:
//!
//! ```text
//! # t  x  y  z  [qw qx qy qz]
//! 0.00  0.0612 0.0559 0.0
//! 0.50  0.0612 0.0389 0.0  1 0 0 0
//! idle 0.25
//! ```
//!
//! Times are seconds and must increase; positions are meters in the mesh
//! frame. `idle <seconds>` holds the previous pose.

use nalgebra::Quaternion;
use thiserror::Error;

use palpa_core::{Quat, Vec3};

#[derive(Debug, Error, PartialEq)]
pub enum GestureError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub t: f64,
    pub position: Vec3,
    pub orientation: Quat,
}

impl Pose {
    pub fn new(t: f64, position: Vec3) -> Self {
        Self {
            t,
            position,
            orientation: Quat::identity(),
        }
    }
}

/// Builds a unit quaternion from `[w, x, y, z]`, normalizing; `None` for a
/// zero or non-finite input.
pub fn quat_from_wxyz(q: [f64; 4]) -> Option<Quat> {
    if !q.iter().all(|c| c.is_finite()) {
        return None;
    }
    let raw = Quaternion::new(q[0], q[1], q[2], q[3]);
    (raw.norm() > 1e-12).then(|| Quat::from_quaternion(raw))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GestureEvent {
    Pose(Pose),
    Idle(f64),
}

pub fn parse_gesture_script(text: &str) -> Result<Vec<GestureEvent>, GestureError> {
    let mut events = Vec::new();
    let mut last_t = f64::NEG_INFINITY;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |message: String| GestureError::Syntax { line, message };
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut fields = content.split_whitespace();
        if content.starts_with("idle") {
            fields.next();
            let d: f64 = fields
                .next()
                .ok_or_else(|| err("idle needs a duration".into()))?
                .parse()
                .map_err(|e| err(format!("idle duration: {e}")))?;
            if fields.next().is_some() || !(d >= 0.0) || !d.is_finite() {
                return Err(err("idle takes one non-negative duration".into()));
            }
            events.push(GestureEvent::Idle(d));
            continue;
        }
        let nums: Vec<f64> = fields
            .map(|f| f.parse::<f64>().map_err(|e| err(format!("`{f}`: {e}"))))
            .collect::<Result<_, _>>()?;
        if nums.len() != 4 && nums.len() != 8 {
            return Err(err(format!("expected 4 or 8 numbers, found {}", nums.len())));
        }
        if !nums.iter().all(|v| v.is_finite()) {
            return Err(err("non-finite value".into()));
        }
        let t = nums[0];
        if !(t > last_t) {
            return Err(err(format!("time {t} does not increase")));
        }
        last_t = t;
        let orientation = if nums.len() == 8 {
            quat_from_wxyz([nums[4], nums[5], nums[6], nums[7]])
                .ok_or_else(|| err("zero quaternion".into()))?
        } else {
            Quat::identity()
        };
        events.push(GestureEvent::Pose(Pose {
            t,
            position: Vec3::new(nums[1], nums[2], nums[3]),
            orientation,
        }));
    }
    Ok(events)
}
