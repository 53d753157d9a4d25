use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn palpa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_palpa"))
        .args(args)
        .env("PALPA_ASSETS", assets())
        .output()
        .unwrap()
}

fn assets() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../assets")
}

fn ok(args: &[&str]) -> String {
    let out = palpa(args);
    assert!(
        out.status.success(),
        "palpa {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn simulate_replay_forcemap_assess() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let gesture = assets().join("gestures/three_taps.gesture");
    ok(&[
        "simulate",
        "--preset",
        "healthy",
        "--gesture",
        gesture.to_str().unwrap(),
        "--trace-out",
        &p("s.trace"),
        "--report",
        &p("s.json"),
    ]);
    let trace = palpa_core::trace::load_trace(p("s.trace")).unwrap();
    assert_eq!(trace.len(), 271);

    let out = palpa(&["replay", "--trace", &p("s.trace"), "--full-rate-out", &p("full.csv")]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("= 0e0 N"));
    let csv = std::fs::read_to_string(p("full.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2701);

    ok(&["forcemap", "--trace", &p("s.trace"), "--out", &p("cones.obj")]);
    let cones = palpa_core::load_mesh(p("cones.obj"), palpa_core::MeshFormat::Obj).unwrap();
    assert_eq!(cones.vertex_count(), 3 * 17);
    ok(&["forcemap", "--trace", &p("s.trace"), "--out", &p("cones.json"), "--format", "text", "--ch", "0.02"]);
    let text = palpa_core::force_map::load_cones_text(p("cones.json")).unwrap();
    assert_eq!(text.len(), 3);
    assert!((text[0].height - 0.02 * text[0].peak_force).abs() < 1e-15);

    let report: serde_json::Value = serde_json::from_str(&ok(&["assess", "--trace", &p("s.trace")])).unwrap();
    assert_eq!(report["classification"], "expert");
    assert_eq!(report["taps"].as_array().unwrap().len(), 3);
}

#[test]
fn presets_and_synth() {
    let dir = tempfile::tempdir().unwrap();
    let listed = ok(&["presets", "list"]);
    for name in ["healthy", "hepatic", "cirrhosis", "cyst"] {
        assert!(listed.contains(name));
    }
    let baked = dir.path().join("cyst.ply");
    ok(&["presets", "bake", "--name", "cyst", "--out", baked.to_str().unwrap()]);
    let mesh = palpa_core::load_mesh(&baked, palpa_core::MeshFormat::Ply).unwrap();
    assert!(mesh.vertex_rgb.iter().any(|c| c[0] < 0.2));

    let out = palpa(&["presets", "bake", "--name", "fibrosis", "--out", baked.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown preset"));

    let trace = dir.path().join("n.trace");
    ok(&["synth", "--profile", "novice", "--taps", "8", "--seed", "5", "--out", trace.to_str().unwrap()]);
    let report: serde_json::Value =
        serde_json::from_str(&ok(&["assess", "--trace", trace.to_str().unwrap()])).unwrap();
    assert_eq!(report["classification"], "novice");
}

#[test]
fn bad_inputs_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.trace");
    std::fs::write(&bad, "{\"format\":\"palpa-trace\",\"version\":2}\n").unwrap();
    let out = palpa(&["assess", "--trace", bad.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("version"));

    let config = dir.path().join("c.toml");
    std::fs::write(&config, "[band]\nf_lo = 9.0\n").unwrap();
    let out = palpa(&["--config", config.to_str().unwrap(), "presets", "list"]);
    assert!(!out.status.success());
}
