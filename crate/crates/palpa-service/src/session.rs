//! One palpation session on a simulated 1 kHz clock.
//!
//! Poses arrive with client timestamps. Tick `k` happens at `k / 1000` s
//! after the first pose; between two poses the tool position moves linearly
//! (constant velocity) and the orientation by slerp. Ticks are only run up
//! to the newest pose, never extrapolated. Every tick feeds the servo, the
//! recorder keeps every tenth tick, and a state message is published each
//! time `floor(k · publish_hz / 1000)` advances (plus tick 0).

use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

use palpa_core::assessment::{
    classify, compute_metrics, AssessmentReport, BandConfig, TapInterval, TapSegmenter, Thresholds,
};
use palpa_core::config::SimConfig;
use palpa_core::deformation::{DisplacementQuery, KernelParams};
use palpa_core::force_map::{cone_for_sample, Cone, ConeScale};
use palpa_core::haptic::{resolver_registry, slerp, SERVO_HZ};
use palpa_core::pathology::PresetInstance;
use palpa_core::recorder::{Recorder, TraceSink};
use palpa_core::trace::{Trace, TraceError, TraceHeader};
use palpa_core::{ContactState, HapticScene, ServoOutput, ToolState, Vec3};

use crate::gesture::{GestureEvent, Pose};
use crate::protocol::{ContactInfo, StateMessage};

/// Tolerance when comparing tick times against pose times, seconds.
const CLOCK_EPS: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("pose time {t} is not after {previous}")]
    NonMonotonic { t: f64, previous: f64 },
    #[error("invalid pose: {0}")]
    InvalidPose(String),
    #[error("invalid settings: {0}")]
    Settings(String),
    #[error("trace: {0}")]
    Trace(#[from] TraceError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionSettings {
    pub band: BandConfig,
    pub thresholds: Thresholds,
    pub cone_scale: ConeScale,
    pub publish_hz: f64,
    pub resolver: String,
    pub queue_capacity: usize,
}

impl Default for SessionSettings {
    fn default() -> Self {
        Self::from(&SimConfig::default())
    }
}

impl From<&SimConfig> for SessionSettings {
    fn from(c: &SimConfig) -> Self {
        Self {
            band: c.band,
            thresholds: c.classifier,
            cone_scale: c.force_map,
            publish_hz: c.session.publish_hz,
            resolver: c.session.resolver.clone(),
            queue_capacity: c.session.queue_capacity,
        }
    }
}

/// Wall-clock cost of the servo steps run so far.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepStats {
    durations: Vec<f64>,
}

impl StepStats {
    pub fn count(&self) -> usize {
        self.durations.len()
    }

    pub fn mean(&self) -> f64 {
        if self.durations.is_empty() {
            0.0
        } else {
            self.durations.iter().sum::<f64>() / self.durations.len() as f64
        }
    }

    /// Nearest-rank percentile, `q` in `[0, 1]`.
    pub fn percentile(&self, q: f64) -> f64 {
        if self.durations.is_empty() {
            return 0.0;
        }
        let mut sorted = self.durations.clone();
        sorted.sort_by(f64::total_cmp);
        let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
        sorted[rank - 1]
    }

    pub fn max(&self) -> f64 {
        self.durations.iter().copied().fold(0.0, f64::max)
    }
}

pub struct SessionSummary {
    pub trace: Trace,
    pub taps: Vec<TapInterval>,
    pub cones: Vec<Cone>,
    pub report: AssessmentReport,
    pub stats: StepStats,
    /// Cones closed by `finish` that no state message carried.
    pub trailing_cones: Vec<Cone>,
}

struct Anchor {
    rel_t: f64,
    position: Vec3,
    orientation: palpa_core::Quat,
}

pub struct Session {
    scene: Arc<HapticScene>,
    kernel: KernelParams,
    settings: SessionSettings,
    origin: Option<f64>,
    anchor: Option<Anchor>,
    next_tick: u64,
    previous_contact: Option<ContactState>,
    recorder: Recorder,
    segmenter: TapSegmenter,
    taps: Vec<TapInterval>,
    cones: Vec<Cone>,
    pending: Vec<Cone>,
    stats: StepStats,
    last_tool: Option<ToolState>,
    last_output: ServoOutput,
}

/// Builds the haptic scene for a preset with the configured resolver.
pub fn scene_for(instance: &PresetInstance, resolver: &str) -> Result<HapticScene, SessionError> {
    let strategy = resolver_registry()
        .get(resolver)
        .ok_or_else(|| SessionError::Settings(format!("unknown resolver `{resolver}`")))?;
    Ok(HapticScene::with_resolver(instance.mesh.clone(), instance.material, strategy))
}

impl Session {
    pub fn new(
        scene: Arc<HapticScene>,
        preset: &str,
        kernel: KernelParams,
        settings: SessionSettings,
    ) -> Result<Self, SessionError> {
        settings
            .band
            .validate()
            .map_err(|e| SessionError::Settings(e.to_string()))?;
        settings
            .cone_scale
            .validate()
            .map_err(|e| SessionError::Settings(e.to_string()))?;
        if !(settings.publish_hz > 0.0 && settings.publish_hz <= SERVO_HZ as f64) {
            return Err(SessionError::Settings(format!(
                "publish_hz {} outside (0, {SERVO_HZ}]",
                settings.publish_hz
            )));
        }
        let header = TraceHeader::new(&scene.mesh().name, preset, *scene.range(), kernel);
        Ok(Self {
            recorder: Recorder::new(header),
            segmenter: TapSegmenter::new(settings.band.f_on, settings.band.f_off),
            scene,
            kernel,
            settings,
            origin: None,
            anchor: None,
            next_tick: 0,
            previous_contact: None,
            taps: Vec::new(),
            cones: Vec::new(),
            pending: Vec::new(),
            stats: StepStats::default(),
            last_tool: None,
            last_output: ServoOutput::free(),
        })
    }

    /// Streams recorded samples to `path` through a bounded writer thread.
    pub fn record_to(mut self, path: impl AsRef<Path>) -> Result<Self, SessionError> {
        let sink = TraceSink::create(path, self.recorder.header(), self.settings.queue_capacity)?;
        self.recorder = Recorder::new(self.recorder.header().clone()).with_sink(sink);
        Ok(self)
    }

    pub fn settings(&self) -> &SessionSettings {
        &self.settings
    }

    pub fn scene(&self) -> &HapticScene {
        &self.scene
    }

    pub fn ticks(&self) -> u64 {
        self.next_tick
    }

    pub fn stats(&self) -> &StepStats {
        &self.stats
    }

    pub fn last_output(&self) -> &ServoOutput {
        &self.last_output
    }

    pub fn last_tool(&self) -> Option<&ToolState> {
        self.last_tool.as_ref()
    }

    pub fn cones(&self) -> &[Cone] {
        &self.cones
    }

    /// Simulated time of the newest pose (or idle end), seconds.
    pub fn time(&self) -> Option<f64> {
        self.anchor.as_ref().map(|a| a.rel_t)
    }

    pub fn push_pose(&mut self, pose: &Pose) -> Result<Vec<StateMessage>, SessionError> {
        if !pose.t.is_finite() || !pose.position.iter().all(|c| c.is_finite()) {
            return Err(SessionError::InvalidPose("non-finite time or position".into()));
        }
        let Some(origin) = self.origin else {
            self.origin = Some(pose.t);
            self.anchor = Some(Anchor {
                rel_t: 0.0,
                position: pose.position,
                orientation: pose.orientation,
            });
            let tool = ToolState {
                t: 0.0,
                position: pose.position,
                orientation: pose.orientation,
                velocity: Vec3::zeros(),
            };
            return Ok(self.tick(&tool).into_iter().collect());
        };
        let anchor = self.anchor.as_ref().expect("anchor set with origin");
        let rel_t = pose.t - origin;
        if !(rel_t > anchor.rel_t) {
            return Err(SessionError::NonMonotonic {
                t: pose.t,
                previous: anchor.rel_t + origin,
            });
        }
        let span = rel_t - anchor.rel_t;
        let (p0, q0, t0) = (anchor.position, anchor.orientation, anchor.rel_t);
        let velocity = (pose.position - p0) / span;
        let mut messages = Vec::new();
        while tick_time(self.next_tick) <= rel_t + CLOCK_EPS {
            let t = tick_time(self.next_tick);
            let s = ((t - t0) / span).clamp(0.0, 1.0);
            let tool = if s >= 1.0 {
                ToolState {
                    t,
                    position: pose.position,
                    orientation: pose.orientation,
                    velocity,
                }
            } else {
                ToolState {
                    t,
                    position: p0 + (pose.position - p0) * s,
                    orientation: slerp(&q0, &pose.orientation, s),
                    velocity,
                }
            };
            messages.extend(self.tick(&tool));
        }
        self.anchor = Some(Anchor {
            rel_t,
            position: pose.position,
            orientation: pose.orientation,
        });
        Ok(messages)
    }

    /// Holds the last pose at rest for `duration` seconds. Before the first
    /// pose there is no tool to hold and nothing happens.
    pub fn idle(&mut self, duration: f64) -> Result<Vec<StateMessage>, SessionError> {
        if !(duration >= 0.0) || !duration.is_finite() {
            return Err(SessionError::InvalidPose(format!("idle duration {duration}")));
        }
        let Some(anchor) = self.anchor.as_mut() else {
            return Ok(Vec::new());
        };
        let end = anchor.rel_t + duration;
        let (position, orientation) = (anchor.position, anchor.orientation);
        anchor.rel_t = end;
        let mut messages = Vec::new();
        while tick_time(self.next_tick) <= end + CLOCK_EPS {
            let tool = ToolState {
                t: tick_time(self.next_tick),
                position,
                orientation,
                velocity: Vec3::zeros(),
            };
            messages.extend(self.tick(&tool));
        }
        Ok(messages)
    }

    pub fn apply(&mut self, event: &GestureEvent) -> Result<Vec<StateMessage>, SessionError> {
        match event {
            GestureEvent::Pose(p) => self.push_pose(p),
            GestureEvent::Idle(d) => self.idle(*d),
        }
    }

    fn should_publish(&self, k: u64) -> bool {
        let hz = self.settings.publish_hz;
        let slot = |k: u64| (k as f64 * hz / SERVO_HZ as f64).floor();
        k == 0 || slot(k) > slot(k - 1)
    }

    fn tick(&mut self, tool: &ToolState) -> Option<StateMessage> {
        let k = self.next_tick;
        self.next_tick += 1;
        let out = self.scene.servo_step(tool, self.previous_contact.as_ref());
        self.stats.durations.push(out.step_duration);
        self.previous_contact = out.contact;
        // a failed trace sink must not stall the servo; the error resurfaces in finish()
        if let Ok(Some(sample)) = self.recorder.push(k, tool, &out) {
            if let Some(tap) = self.segmenter.push_sample(&sample) {
                self.close_tap(tap);
            }
        }
        self.last_tool = Some(*tool);
        self.last_output = out;
        self.should_publish(k).then(|| self.state_message(tool.t))
    }

    fn close_tap(&mut self, tap: TapInterval) {
        let sample = &self.recorder.samples()[tap.peak_sample_index];
        let scale = &self.settings.cone_scale;
        let cone = cone_for_sample(sample, self.taps.len(), scale.c_h, scale.c_r);
        self.taps.push(tap);
        self.cones.push(cone);
        self.pending.push(cone);
    }

    fn state_message(&mut self, t: f64) -> StateMessage {
        let out = &self.last_output;
        let magnitude = out.force.norm();
        StateMessage {
            t,
            contact: out.contact.map(|c| ContactInfo {
                point: c.proxy,
                normal: c.normal,
                penetration: c.penetration,
            }),
            force: out.force,
            force_magnitude: magnitude,
            gauge: self.settings.band.gauge(magnitude),
            cones: std::mem::take(&mut self.pending),
            deformation: out.contact.map(|c| DisplacementQuery {
                contact_point: c.proxy,
                contact_normal: c.normal,
                penetration: c.penetration,
                params: self.kernel,
            }),
        }
    }

    /// Closes any open tap, flushes the recorder and scores the session.
    pub fn finish(mut self) -> Result<SessionSummary, SessionError> {
        if let Some(tap) = self.segmenter.finish() {
            self.close_tap(tap);
        }
        let trace = self.recorder.finish()?;
        let mut report = compute_metrics(&self.taps, &self.settings.band);
        report.classification = classify(&report, &self.settings.thresholds);
        report.thresholds = Some(self.settings.thresholds);
        Ok(SessionSummary {
            trace,
            taps: self.taps,
            cones: self.cones,
            report,
            stats: self.stats,
            trailing_cones: self.pending,
        })
    }
}

fn tick_time(k: u64) -> f64 {
    k as f64 / SERVO_HZ as f64
}

pub struct SessionRun {
    pub messages: Vec<StateMessage>,
    pub summary: SessionSummary,
}

/// Runs a scripted session end to end.
pub fn run_session(
    instance: &PresetInstance,
    settings: SessionSettings,
    events: &[GestureEvent],
    trace_out: Option<&Path>,
) -> Result<SessionRun, SessionError> {
    let scene = Arc::new(scene_for(instance, &settings.resolver)?);
    let mut session = Session::new(scene, &instance.preset.name, instance.kernel, settings)?;
    if let Some(path) = trace_out {
        session = session.record_to(path)?;
    }
    let mut messages = Vec::new();
    for event in events {
        messages.extend(session.apply(event)?);
    }
    Ok(SessionRun {
        messages,
        summary: session.finish()?,
    })
}
