//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use palpa_core::assessment::{segment_taps, assess, BandConfig, Classification, Thresholds, MIN_TAP_SAMPLES};
use palpa_core::deformation::{gauss_kernel, Deformer, DisplacementQuery, KernelParams};
use palpa_core::force_map::build_cones;
use palpa_core::haptic::compute_force;
use palpa_core::pathology::{AssetStore, PresetInstance, PresetLibrary};
use palpa_core::recorder::replay;
use palpa_core::stiffness::{bake_uniform, MaterialPoint};
use palpa_core::synth::{scale_forces, synth_trace, Profile};
use palpa_core::trace::Trace;
use palpa_core::{Barycentric, ContactState, HapticScene, MaterialRange, ToolState, TriMesh, Vec3};
use palpa_service::gesture::{GestureEvent, Pose};
use palpa_service::session::{run_session, SessionSettings};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn library() -> PresetLibrary {
    PresetLibrary::load(AssetStore::new(AssetStore::bundled_root())).expect("shipped presets load")
}

fn liver() -> TriMesh {
    AssetStore::new(AssetStore::bundled_root())
        .load_mesh("liver_3k")
        .expect("shipped liver mesh")
}

/// Upper-surface vertex shared by the probe criteria (also the cyst centre).
const PROBE_VERTEX: usize = 193;

// ---------------------------------------------------------------- kernel

fn kernel_closed_form() -> Outcome {
    let started = Instant::now();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (a, w) in [(1.0, 0.02), (1.2, 0.05), (0.7, 0.013)] {
        for i in 0..1000 {
            let d = 5.0 * w * i as f64 / 999.0;
            // independent evaluation: exp of the negated squared ratio
            let ratio = d / w;
            let expected = a * f64::exp(-(ratio * ratio));
            let got = gauss_kernel(d, a, w).map_err(|e| e.to_string())?;
            let rel = if expected == 0.0 { got.abs() } else { ((got - expected) / expected).abs() };
            worst = worst.max(rel);
            count += 1;
        }
    }
    let secs = started.elapsed().as_secs_f64();
    check(
        worst <= 1e-12 && secs < 1.0,
        format!("{count} points, max relative error {worst:.2e} (<= 1e-12), {secs:.3} s (< 1 s)"),
    )
}

// ---------------------------------------------------------------- force law

fn press_peak(scene: &HapticScene, triangle: usize, depth: f64, steps: usize) -> f64 {
    let [a, b, c] = scene.mesh().triangle_vertices(triangle);
    let centroid = (a + b + c) / 3.0;
    let n = scene.mesh().face_normal(triangle);
    let tools: Vec<ToolState> = (0..=steps)
        .map(|i| ToolState::at_rest(i as f64 * 0.001, centroid - n * (depth * i as f64 / steps as f64)))
        .collect();
    scene.run(&tools).iter().map(|o| o.force.norm()).fold(0.0, f64::max)
}

fn force_law() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let k = rng.gen_range(1.0..1000.0);
        let dx = rng.gen_range(1e-6..0.05);
        let normal = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            .normalize();
        let velocity = Vec3::new(rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1));
        let contact = ContactState {
            triangle: 0,
            bary: Barycentric::centroid(),
            proxy: Vec3::zeros(),
            normal,
            penetration: dx,
            material: MaterialPoint { k, b: 0.0 },
        };
        let f = compute_force(&contact, &velocity).norm();
        worst = worst.max(((f - k * dx) / (k * dx)).abs());
    }
    // 10 mm press on a uniform k = 250 N/m, b = 0 liver
    let range = MaterialRange::default();
    let mesh = bake_uniform(&liver(), range.red_for_stiffness(250.0), 0.0).map_err(|e| e.to_string())?;
    let scene = HapticScene::new(Arc::new(mesh), range);
    let top = top_triangle(&scene);
    let peak = press_peak(&scene, top, 0.010, 100);
    check(
        worst <= 4.0 * f64::EPSILON && (peak - 2.5).abs() <= 1e-9,
        format!(
            "10^4 pairs: max relative |F| - k*dx = {worst:.2e} (rounding only); 10 mm press peak {peak:.12} N (2.5 +/- 1e-9)"
        ),
    )
}

fn top_triangle(scene: &HapticScene) -> usize {
    let mesh = scene.mesh();
    let v = mesh.vertices[PROBE_VERTEX];
    (0..mesh.triangle_count())
        .filter(|&t| mesh.triangles[t].contains(&PROBE_VERTEX))
        .min_by(|&a, &b| {
            let ca = mesh.triangle_vertices(a).iter().sum::<Vec3>() / 3.0;
            let cb = mesh.triangle_vertices(b).iter().sum::<Vec3>() / 3.0;
            (ca - v).norm().total_cmp(&(cb - v).norm())
        })
        .expect("probe vertex has triangles")
}

// ---------------------------------------------------------------- deformation

fn sparse_equals_dense() -> Outcome {
    let mesh = liver();
    let deformer = Deformer::new(&mesh, 0.01);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut kept, mut omitted) = (0usize, 0usize);
    for q in 0..100 {
        let t = rng.gen_range(0..mesh.triangle_count());
        let (u, v) = (rng.gen_range(0.0..1.0f64), rng.gen_range(0.0..1.0f64));
        let (u, v) = if u + v > 1.0 { (1.0 - u, 1.0 - v) } else { (u, v) };
        let [a, b, c] = mesh.triangle_vertices(t);
        let query = DisplacementQuery {
            contact_point: a + (b - a) * u + (c - a) * v,
            contact_normal: mesh.face_normal(t),
            penetration: rng.gen_range(0.0..0.015),
            params: KernelParams {
                amplitude: rng.gen_range(0.5..1.5),
                width: rng.gen_range(0.005..0.05),
                cutoff_eps: 10f64.powf(rng.gen_range(-7.0..-4.0)),
            },
        };
        let sparse = deformer.field(&query).map_err(|e| e.to_string())?;
        let linear = palpa_core::deformation::displacement_field(&mesh, &query).map_err(|e| e.to_string())?;
        if sparse != linear {
            return Err(format!("query {q}: grid and linear sparse fields differ"));
        }
        let p = &query.params;
        for (i, x) in mesh.vertices.iter().enumerate() {
            let d = (x - query.contact_point).norm();
            let magnitude = query.penetration * p.amplitude * (-(d * d) / (p.width * p.width)).exp();
            let dense = -query.contact_normal * magnitude;
            match sparse.get(&i) {
                Some(s) if *s == dense && magnitude >= p.cutoff_eps => kept += 1,
                None if magnitude < p.cutoff_eps => omitted += 1,
                other => {
                    return Err(format!(
                        "query {q} vertex {i}: sparse {other:?}, dense magnitude {magnitude:e} vs eps {:e}",
                        p.cutoff_eps
                    ))
                }
            }
        }
    }
    check(
        true,
        format!("100 queries on {} triangles: {kept} vertices match exactly, {omitted} omitted all below eps", mesh.triangle_count()),
    )
}

// ---------------------------------------------------------------- record / replay

/// Ten seconds of sliding taps around the probe vertex, poses at 50 Hz.
fn ten_second_script(mesh: &TriMesh) -> Vec<GestureEvent> {
    let center = mesh.vertices[PROBE_VERTEX];
    let n = mesh.vertex_normals[PROBE_VERTEX];
    let tangent = n.cross(&Vec3::z()).normalize();
    let bitangent = n.cross(&tangent);
    let mut events = Vec::new();
    for i in 0..500 {
        let t = i as f64 * 0.02;
        let depth = 0.009 * (std::f64::consts::PI * t / 0.8).sin() - 0.002;
        let lateral = tangent * (0.015 * (0.7 * t).sin()) + bitangent * (0.01 * (0.45 * t).cos());
        let q = palpa_core::Quat::from_euler_angles(0.2 * (0.3 * t).sin(), 0.1, 0.0);
        events.push(GestureEvent::Pose(Pose {
            t,
            position: center + lateral - n * depth,
            orientation: q,
        }));
    }
    events.push(GestureEvent::Pose(Pose::new(9.99, center + n * 0.01)));
    events
}

fn record_replay() -> Outcome {
    let lib = library();
    let instance = lib.instantiate("cyst").map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("ten.trace");
    let script = ten_second_script(&instance.mesh);
    let run = run_session(&instance, SessionSettings::default(), &script, Some(&path)).map_err(|e| e.to_string())?;
    let trace = palpa_core::trace::load_trace(&path).map_err(|e| e.to_string())?;
    if trace != run.summary.trace {
        return Err("trace file differs from the in-memory recording".into());
    }
    let scene = HapticScene::new(instance.mesh.clone(), trace.header.material);
    let first = replay(&trace, &scene);
    let second = replay(&trace, &scene);
    let identical = first.len() == second.len() && first.iter().zip(&second).all(|(a, b)| a.same_result(b));
    let mut worst: f64 = 0.0;
    for (i, s) in trace.samples.iter().enumerate() {
        worst = worst.max((first[10 * i].force - s.force).norm());
    }
    let contacts = trace.samples.iter().filter(|s| s.contact).count();
    check(
        trace.len() == 1000 && worst <= 1e-9 && identical,
        format!(
            "{} instants ({contacts} in contact), max |dF| {worst:e} N (<= 1e-9), {} replayed ticks, repeat bit-identical: {identical}",
            trace.len(),
            first.len()
        ),
    )
}

// ---------------------------------------------------------------- throughput

fn throughput() -> Outcome {
    let lib = library();
    let instance = lib.instantiate("cirrhosis").map_err(|e| e.to_string())?;
    let scene = HapticScene::new(instance.mesh.clone(), instance.material);
    let mesh = scene.mesh();
    // a continuous path over the upper surface, dipping in and out of contact
    let anchors: Vec<(Vec3, Vec3)> = (0..1000)
        .map(|i| {
            let theta = std::f64::consts::TAU * i as f64 / 1000.0;
            let above = Vec3::new(0.07 * theta.cos(), 0.2, 0.05 * theta.sin());
            let hit = scene.surface().nearest(&above, None);
            (hit.point, scene.surface().pseudo_normal(&hit))
        })
        .collect();
    let steps = 100_000;
    let mut durations = Vec::with_capacity(steps);
    let mut previous = None;
    let mut contacts = 0;
    for k in 0..steps {
        let (p, n) = anchors[(k / 100) % anchors.len()];
        let (q, m) = anchors[(k / 100 + 1) % anchors.len()];
        let s = (k % 100) as f64 / 100.0;
        let depth = 0.006 * (std::f64::consts::TAU * k as f64 / 500.0).sin() + 0.002;
        let position = p + (q - p) * s - (n + (m - n) * s).normalize() * depth;
        let tool = ToolState::at_rest(k as f64 * 0.001, position);
        let started = Instant::now();
        let out = scene.servo_step(&tool, previous.as_ref());
        durations.push(started.elapsed().as_secs_f64());
        previous = out.contact;
        contacts += out.contact.is_some() as usize;
    }
    let mean = durations.iter().sum::<f64>() / steps as f64;
    durations.sort_by(f64::total_cmp);
    let p99 = durations[(0.99 * steps as f64).ceil() as usize - 1];

    // headless publishing: a 10 s scripted session must emit 60 states per simulated second
    // and run no slower than real time
    let mut script = ten_second_script(mesh);
    script.push(GestureEvent::Pose(Pose::new(10.0, mesh.vertices[PROBE_VERTEX] + mesh.vertex_normals[PROBE_VERTEX] * 0.01)));
    let started = Instant::now();
    let run = run_session(&instance, SessionSettings::default(), &script, None).map_err(|e| e.to_string())?;
    let wall = started.elapsed().as_secs_f64();
    let simulated = (run.summary.stats.count() - 1) as f64 / 1000.0;
    let published = run.messages.len();
    let rate = (published - 1) as f64 / simulated;
    let build = if cfg!(debug_assertions) { "debug" } else { "release" };
    let p99_note = if p99 < 2e-3 { "" } else { " (p99 above 2 ms target)" };
    check(
        mean < 1e-3 && published == 601 && wall < simulated,
        format!(
            "{build} build, {} triangles, 10^5 steps ({contacts} in contact): mean {:.1} us (< 1000), p99 {:.1} us (< 2000){p99_note}; publishing {published} states (601 expected, {rate:.2} Hz) over {simulated:.2} s simulated in {wall:.2} s wall",
            mesh.triangle_count(),
            mean * 1e6,
            p99 * 1e6
        ),
    )
}

// ---------------------------------------------------------------- pathology

fn probe_force(instance: &PresetInstance, vertex: usize) -> (f64, f64) {
    let mesh = &instance.mesh;
    let scene = HapticScene::new(mesh.clone(), instance.material);
    let tool = ToolState::at_rest(0.0, mesh.vertices[vertex] - mesh.vertex_normals[vertex] * 0.007);
    let out = scene.servo_step(&tool, None);
    (out.force.norm(), out.contact.map_or(0.0, |c| c.penetration))
}

fn pathology_ordering() -> Outcome {
    let lib = library();
    let get = |n: &str| lib.instantiate(n).map_err(|e| e.to_string());
    let (cyst, healthy, cirrhosis) = (get("cyst")?, get("healthy")?, get("cirrhosis")?);
    let nodule = (0..cirrhosis.mesh.vertex_count())
        .max_by(|&a, &b| cirrhosis.mesh.vertex_rgb[a][0].total_cmp(&cirrhosis.mesh.vertex_rgb[b][0]))
        .expect("non-empty mesh");
    let (fc, pc) = probe_force(&cyst, PROBE_VERTEX);
    let (fh, ph) = probe_force(&healthy, PROBE_VERTEX);
    let (fn_, pn) = probe_force(&cirrhosis, nodule);
    check(
        fc * 1.1 <= fh && fh * 1.1 <= fn_,
        format!(
            "cyst {fc:.3} N < healthy {fh:.3} N < cirrhosis nodule {fn_:.3} N (ratios {:.2}, {:.2}; need >= 1.10), penetrations {:.4}/{:.4}/{:.4} mm",
            fh / fc,
            fn_ / fh,
            pc * 1e3,
            ph * 1e3,
            pn * 1e3
        ),
    )
}

// ---------------------------------------------------------------- expert / novice

/// Brute-force threshold crossings: (start, end, peak index) per tap.
fn crossing_oracle(trace: &Trace, f_on: f64, f_off: f64) -> Vec<(usize, usize, usize)> {
    let f: Vec<f64> = trace.samples.iter().map(|s| s.force.norm()).collect();
    let mut taps = Vec::new();
    let mut i = 0;
    while i < f.len() {
        if f[i] <= f_on {
            i += 1;
            continue;
        }
        let mut end = i;
        while end + 1 < f.len() && f[end + 1] >= f_off {
            end += 1;
        }
        if end + 1 - i >= MIN_TAP_SAMPLES {
            let peak = (i..=end).fold(i, |best, k| if f[k] > f[best] { k } else { best });
            taps.push((i, end, peak));
        }
        i = end + 1;
    }
    taps
}

fn expert_novice() -> Outcome {
    let band = BandConfig::default();
    let thresholds = Thresholds::default();
    let mut correct = 0;
    let mut segmentation_ok = 0;
    let mut worst_expert_cv: f64 = 0.0;
    let mut best_novice_cv = f64::INFINITY;
    for seed in 0..20u64 {
        for (profile, expected) in [(Profile::Expert, Classification::Expert), (Profile::Novice, Classification::Novice)] {
            let trace = synth_trace(profile, 12, 1000 + seed);
            let report = assess(&trace, &band, &thresholds);
            correct += (report.classification == expected) as usize;
            let got: Vec<_> = report.taps.iter().map(|t| (t.start_index, t.end_index, t.peak_sample_index)).collect();
            segmentation_ok += (got == crossing_oracle(&trace, band.f_on, band.f_off) && got.len() == 12) as usize;
            match profile {
                Profile::Expert => worst_expert_cv = worst_expert_cv.max(report.cv_peak_force),
                Profile::Novice => best_novice_cv = best_novice_cv.min(report.cv_peak_force),
            }
        }
    }
    check(
        correct == 40 && segmentation_ok == 40,
        format!(
            "{correct}/40 classified correctly, {segmentation_ok}/40 segmentations equal the crossing oracle; force cv expert max {worst_expert_cv:.3}, novice min {best_novice_cv:.3}"
        ),
    )
}

// ---------------------------------------------------------------- force map

fn force_map_linearity() -> Outcome {
    let band = BandConfig::default();
    let (c_h, c_r) = (0.012, 0.004);
    let mut cones_total = 0;
    for i in 0..50u64 {
        let profile = if i % 2 == 0 { Profile::Expert } else { Profile::Novice };
        let trace = synth_trace(profile, 1 + (i as usize * 7) % 15, 5000 + i);
        let taps = segment_taps(&trace, band.f_on, band.f_off);
        let cones = build_cones(&trace, &taps, c_h, c_r).map_err(|e| e.to_string())?;
        if cones.len() != taps.len() {
            return Err(format!("trace {i}: {} cones for {} taps", cones.len(), taps.len()));
        }
        let doubled = scale_forces(&trace, 2.0);
        let taps2 = segment_taps(&doubled, band.f_on, band.f_off);
        let cones2 = build_cones(&doubled, &taps2, c_h, c_r).map_err(|e| e.to_string())?;
        if cones2.len() != cones.len() {
            return Err(format!("trace {i}: doubling changed the cone count"));
        }
        for (a, b) in cones.iter().zip(&cones2) {
            if b.height != 2.0 * a.height || b.radius != 2.0 * a.radius {
                return Err(format!("trace {i}: cone {} not exactly doubled", a.tap_index));
            }
        }
        cones_total += cones.len();
    }
    check(
        true,
        format!("50 traces, {cones_total} cones: count equals tap count, heights and radii exactly doubled"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("kernel closed form", kernel_closed_form),
        ("force law", force_law),
        ("sparse deformation = dense", sparse_equals_dense),
        ("record/replay closure", record_replay),
        ("throughput", throughput),
        ("pathology ordering", pathology_ordering),
        ("expert/novice separation", expert_novice),
        ("force-map linearity", force_map_linearity),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
