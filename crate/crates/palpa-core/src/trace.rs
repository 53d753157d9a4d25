//! 100 Hz session traces and their on-disk format.
//!
//! A trace file is UTF-8, one JSON document per line:
//!
//! ```text
//! {"format":"palpa-trace","version":1,"mesh":"liver_3k","preset":"healthy","material":{...},"kernel":{...}}
//! {"t":0.0,"p":[x,y,z],"q":[w,x,y,z],"v":[x,y,z],"f":[x,y,z],"c":false,"d":0.0,"x":null,"n":null}
//! ...
//! ```
//!
//! `p` position (m), `q` orientation quaternion, `v` velocity (m/s), `f` force
//! (N), `c` contact flag, `d` penetration (m), `x` proxy point and `n`
//! contact normal (both `null` without contact). Reals are written in
//! shortest round-trip form, so save/load is bit-exact.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::Quaternion;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::deformation::KernelParams;
use crate::haptic::{ServoOutput, ToolState};
use crate::stiffness::MaterialRange;
use crate::{Quat, Vec3};

pub const TRACE_FORMAT: &str = "palpa-trace";
pub const TRACE_VERSION: u32 = 1;
/// Trace sample period, seconds.
pub const SAMPLE_DT: f64 = 0.01;
/// Servo ticks per trace sample.
pub const DECIMATION: u64 = 10;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("unsupported trace version: {0}")]
    Version(String),
    #[error("schema error at line {line}: {message}")]
    Schema { line: usize, message: String },
}

fn schema(line: usize, message: impl Into<String>) -> TraceError {
    TraceError::Schema {
        line,
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub format: String,
    pub version: u32,
    pub mesh: String,
    pub preset: String,
    pub material: MaterialRange,
    pub kernel: KernelParams,
}

impl TraceHeader {
    pub fn new(mesh: &str, preset: &str, material: MaterialRange, kernel: KernelParams) -> Self {
        Self {
            format: TRACE_FORMAT.to_string(),
            version: TRACE_VERSION,
            mesh: mesh.to_string(),
            preset: preset.to_string(),
            material,
            kernel,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceSample {
    pub t: f64,
    pub position: Vec3,
    pub orientation: Quat,
    pub velocity: Vec3,
    pub force: Vec3,
    pub contact: bool,
    pub penetration: f64,
    pub proxy: Option<Vec3>,
    pub normal: Option<Vec3>,
}

impl ForceSample {
    pub fn from_servo(tool: &ToolState, out: &ServoOutput) -> Self {
        Self {
            t: tool.t,
            position: tool.position,
            orientation: tool.orientation,
            velocity: tool.velocity,
            force: out.force,
            contact: out.contact.is_some(),
            penetration: out.contact.map_or(0.0, |c| c.penetration),
            proxy: out.contact.map(|c| c.proxy),
            normal: out.contact.map(|c| c.normal),
        }
    }

    pub fn tool_state(&self) -> ToolState {
        ToolState {
            t: self.t,
            position: self.position,
            orientation: self.orientation,
            velocity: self.velocity,
        }
    }

    /// Surface normal for tangential decomposition: the recorded contact
    /// normal, else the force direction.
    pub fn surface_normal(&self) -> Option<Vec3> {
        self.normal.or_else(|| {
            let n = self.force.norm();
            (n > 0.0).then(|| self.force / n)
        })
    }

    /// Velocity component perpendicular to the surface normal.
    pub fn tangential_speed(&self) -> f64 {
        match self.surface_normal() {
            Some(n) => (self.velocity - n * self.velocity.dot(&n)).norm(),
            None => self.velocity.norm(),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SampleRecord {
    t: f64,
    p: [f64; 3],
    q: [f64; 4],
    v: [f64; 3],
    f: [f64; 3],
    c: bool,
    d: f64,
    x: Option<[f64; 3]>,
    n: Option<[f64; 3]>,
}

impl From<&ForceSample> for SampleRecord {
    fn from(s: &ForceSample) -> Self {
        let q = s.orientation.quaternion();
        SampleRecord {
            t: s.t,
            p: s.position.into(),
            q: [q.w, q.i, q.j, q.k],
            v: s.velocity.into(),
            f: s.force.into(),
            c: s.contact,
            d: s.penetration,
            x: s.proxy.map(Into::into),
            n: s.normal.map(Into::into),
        }
    }
}

impl From<SampleRecord> for ForceSample {
    fn from(r: SampleRecord) -> Self {
        ForceSample {
            t: r.t,
            position: r.p.into(),
            orientation: Quat::new_unchecked(Quaternion::new(r.q[0], r.q[1], r.q[2], r.q[3])),
            velocity: r.v.into(),
            force: r.f.into(),
            contact: r.c,
            penetration: r.d,
            proxy: r.x.map(Into::into),
            normal: r.n.map(Into::into),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub header: TraceHeader,
    pub samples: Vec<ForceSample>,
}

impl Trace {
    pub fn new(header: TraceHeader) -> Self {
        Self {
            header,
            samples: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }

    pub fn force_magnitudes(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.force.norm()).collect()
    }

    /// Checks every sample invariant. Line numbers in errors are 1-based
    /// file lines (header is line 1).
    pub fn validate(&self) -> Result<(), TraceError> {
        if self.header.format != TRACE_FORMAT {
            return Err(schema(1, format!("format tag `{}`", self.header.format)));
        }
        if self.header.version != TRACE_VERSION {
            return Err(TraceError::Version(self.header.version.to_string()));
        }
        let mut last_t = f64::NEG_INFINITY;
        for (i, s) in self.samples.iter().enumerate() {
            validate_sample(s, last_t, i + 2)?;
            last_t = s.t;
        }
        Ok(())
    }

    pub fn header_line(&self) -> String {
        serde_json::to_string(&self.header).expect("header serializes")
    }

    pub fn write_to(&self, out: &mut impl Write) -> Result<(), TraceError> {
        writeln!(out, "{}", self.header_line())?;
        for s in &self.samples {
            writeln!(out, "{}", sample_line(s))?;
        }
        Ok(())
    }

    pub fn read_from(input: impl BufRead) -> Result<Trace, TraceError> {
        let mut lines = input.lines();
        let header_line = lines.next().ok_or_else(|| schema(1, "empty file"))??;
        let header = parse_header(&header_line)?;
        let mut samples = Vec::new();
        let mut last_t = f64::NEG_INFINITY;
        for (i, line) in lines.enumerate() {
            let line = line?;
            let lineno = i + 2;
            if line.trim().is_empty() {
                continue;
            }
            let record: SampleRecord = serde_json::from_str(&line)
                .map_err(|e| schema(lineno, e.to_string()))?;
            let sample = ForceSample::from(record);
            validate_sample(&sample, last_t, lineno)?;
            last_t = sample.t;
            samples.push(sample);
        }
        Ok(Trace { header, samples })
    }
}

pub fn sample_line(s: &ForceSample) -> String {
    serde_json::to_string(&SampleRecord::from(s)).expect("sample serializes")
}

fn parse_header(line: &str) -> Result<TraceHeader, TraceError> {
    let value: serde_json::Value =
        serde_json::from_str(line).map_err(|e| schema(1, format!("header: {e}")))?;
    match value.get("format").and_then(|f| f.as_str()) {
        Some(TRACE_FORMAT) => {}
        other => return Err(schema(1, format!("format tag {other:?}"))),
    }
    match value.get("version") {
        Some(v) if v.as_u64() == Some(TRACE_VERSION as u64) => {}
        Some(v) => return Err(TraceError::Version(v.to_string())),
        None => return Err(TraceError::Version("missing".into())),
    }
    serde_json::from_value(value).map_err(|e| schema(1, format!("header: {e}")))
}

fn validate_sample(s: &ForceSample, last_t: f64, line: usize) -> Result<(), TraceError> {
    let finite = |v: &Vec3| v.iter().all(|c| c.is_finite());
    if !s.t.is_finite() || !finite(&s.position) || !finite(&s.velocity) || !finite(&s.force) {
        return Err(schema(line, "non-finite value"));
    }
    if !(s.t > last_t) {
        return Err(schema(line, format!("timestamp {} not after {}", s.t, last_t)));
    }
    let ticks = s.t / SAMPLE_DT;
    if (ticks - ticks.round()).abs() * SAMPLE_DT > 1e-9 {
        return Err(schema(line, format!("timestamp {} not a multiple of 0.01 s", s.t)));
    }
    if (s.orientation.quaternion().norm() - 1.0).abs() > 1e-6 {
        return Err(schema(line, "orientation is not a unit quaternion"));
    }
    if !(s.penetration >= 0.0) {
        return Err(schema(line, "negative penetration"));
    }
    if !s.contact && (s.force != Vec3::zeros() || s.penetration != 0.0) {
        return Err(schema(line, "force or penetration without contact"));
    }
    if !s.contact && (s.proxy.is_some() || s.normal.is_some()) {
        return Err(schema(line, "proxy or normal without contact"));
    }
    Ok(())
}

pub fn save_trace(trace: &Trace, path: impl AsRef<Path>) -> Result<(), TraceError> {
    let mut out = BufWriter::new(File::create(path)?);
    trace.write_to(&mut out)?;
    out.flush()?;
    Ok(())
}

pub fn load_trace(path: impl AsRef<Path>) -> Result<Trace, TraceError> {
    Trace::read_from(BufReader::new(File::open(path)?))
}
