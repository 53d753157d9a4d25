//! Seeded synthetic palpation traces for the expert and novice profiles.
//!
//! The tool taps a flat surface (`z = 0`, normal `+z`) while sliding in the
//! plane. Each tap is a linear ramp, a plateau at the peak force, a ramp
//! down and a lifted gap with no contact.

use std::f64::consts::TAU;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::deformation::KernelParams;
use crate::stiffness::MaterialRange;
use crate::trace::{ForceSample, Trace, TraceHeader, SAMPLE_DT};
use crate::{Quat, Vec3};

/// Stiffness used to turn force into penetration depth, N/m.
const SYNTH_K: f64 = 330.0;
const RAMP: usize = 6;
const LIFT: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Expert,
    Novice,
}

impl Profile {
    pub fn name(self) -> &'static str {
        match self {
            Profile::Expert => "expert",
            Profile::Novice => "novice",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "expert" => Some(Profile::Expert),
            "novice" => Some(Profile::Novice),
            _ => None,
        }
    }
}

struct TapPlan {
    peak: f64,
    plateau: usize,
    gap: usize,
    speed: f64,
    heading: f64,
    tilt: Quat,
}

fn plan(profile: Profile, n_taps: usize, rng: &mut ChaCha8Rng) -> Vec<TapPlan> {
    match profile {
        Profile::Expert => {
            let base_speed = rng.gen_range(0.018..0.022);
            let heading = rng.gen_range(0.0..TAU);
            let tilt = Quat::from_euler_angles(rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1), 0.0);
            (0..n_taps)
                .map(|_| TapPlan {
                    peak: rng.gen_range(2.2..=2.4),
                    plateau: 20,
                    gap: 25,
                    speed: base_speed * rng.gen_range(0.95..1.05),
                    heading: heading + rng.gen_range(-0.05..0.05),
                    tilt,
                })
                .collect()
        }
        Profile::Novice => {
            // alternate soft and hard taps: consecutive peaks differ by >= 40%
            let mut high = rng.gen_bool(0.5);
            let mut fast = rng.gen_bool(0.5);
            (0..n_taps)
                .map(|_| {
                    let peak = if high {
                        rng.gen_range(2.9..=4.5)
                    } else {
                        rng.gen_range(0.8..=1.8)
                    };
                    let speed = if fast {
                        rng.gen_range(0.04..0.09)
                    } else {
                        rng.gen_range(0.003..0.012)
                    };
                    high = !high;
                    fast = rng.gen_bool(0.3) != fast;
                    TapPlan {
                        peak,
                        plateau: rng.gen_range(5..=30),
                        gap: rng.gen_range(8..=40),
                        speed,
                        heading: rng.gen_range(0.0..TAU),
                        tilt: Quat::from_euler_angles(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5), 0.0),
                    }
                })
                .collect()
        }
    }
}

/// Deterministic per `(profile, n_taps, seed)`. Panics if `n_taps == 0`.
pub fn synth_trace(profile: Profile, n_taps: usize, seed: u64) -> Trace {
    assert!(n_taps >= 1, "n_taps must be >= 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let taps = plan(profile, n_taps, &mut rng);

    let header = TraceHeader::new(
        "synthetic",
        profile.name(),
        MaterialRange::default(),
        KernelParams::default(),
    );
    let mut trace = Trace::new(header);
    let mut xy = Vec3::zeros();
    let mut prev_depth = 0.0;

    let mut push = |trace: &mut Trace, force: f64, speed: f64, heading: f64, tilt: Quat, rng: &mut ChaCha8Rng| {
        let burst = match profile {
            Profile::Expert => 1.0,
            Profile::Novice => rng.gen_range(0.4..1.6),
        };
        let dir = Vec3::new(heading.cos(), heading.sin(), 0.0);
        let tangential = dir * speed * burst;
        let depth = force / SYNTH_K;
        let contact = force > 0.0;
        let z = if contact { -depth } else { LIFT };
        let vz = if contact { -(depth - prev_depth) / SAMPLE_DT } else { 0.0 };
        prev_depth = if contact { depth } else { 0.0 };
        let i = trace.samples.len();
        trace.samples.push(ForceSample {
            t: i as f64 / 100.0,
            position: Vec3::new(xy.x, xy.y, z),
            orientation: tilt,
            velocity: tangential + Vec3::new(0.0, 0.0, vz),
            force: Vec3::new(0.0, 0.0, force),
            contact,
            penetration: if contact { depth } else { 0.0 },
            proxy: contact.then(|| Vec3::new(xy.x, xy.y, 0.0)),
            normal: contact.then(Vec3::z),
        });
        xy += tangential * SAMPLE_DT;
    };

    for _ in 0..5 {
        push(&mut trace, 0.0, 0.0, 0.0, taps[0].tilt, &mut rng);
    }
    for tap in &taps {
        let ramp = (1..RAMP).map(|k| tap.peak * k as f64 / RAMP as f64);
        let forces: Vec<f64> = ramp
            .clone()
            .chain(std::iter::repeat(tap.peak).take(tap.plateau))
            .chain(ramp.rev())
            .collect();
        for f in forces {
            push(&mut trace, f, tap.speed, tap.heading, tap.tilt, &mut rng);
        }
        for _ in 0..tap.gap {
            push(&mut trace, 0.0, tap.speed, tap.heading, tap.tilt, &mut rng);
        }
    }
    trace
}

/// Multiplies every force by `s`, leaving kinematics untouched.
pub fn scale_forces(trace: &Trace, s: f64) -> Trace {
    let mut out = trace.clone();
    for sample in &mut out.samples {
        sample.force *= s;
    }
    out
}
