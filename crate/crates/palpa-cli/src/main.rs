use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use palpa_core::assessment::{assess, segment_taps, AssessmentReport};
use palpa_core::config::{ConfigError, SimConfig};
use palpa_core::force_map::{build_cones, export_cones, ForceMapError};
use palpa_core::mesh::{load_mesh_auto, save_mesh, MeshError, MeshFormat};
use palpa_core::pathology::{AssetStore, PathologyError, PresetLibrary};
use palpa_core::recorder::replay;
use palpa_core::synth::{synth_trace, Profile};
use palpa_core::trace::{load_trace, save_trace, TraceError};
use palpa_core::HapticScene;
use palpa_service::gesture::{parse_gesture_script, GestureError};
use palpa_service::session::{run_session, SessionError, SessionSettings};
use palpa_service::{spawn_server, ServerState};

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Preset(#[from] PathologyError),
    #[error("{0}")]
    Mesh(#[from] MeshError),
    #[error("{0}")]
    Trace(#[from] TraceError),
    #[error("{0}")]
    ForceMap(#[from] ForceMapError),
    #[error("gesture script: {0}")]
    Gesture(#[from] GestureError),
    #[error("session: {0}")]
    Session(#[from] SessionError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
}

fn io_err(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}

#[derive(Parser)]
#[command(name = "palpa", version, about = "Virtual liver palpation: simulate, record, replay and assess")]
struct Cli {
    /// Run configuration (TOML); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Asset directory (overrides PALPA_ASSETS).
    #[arg(long, global = true)]
    assets: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Serve interactive sessions over WebSocket.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8765")]
        bind: String,
        /// Record every session trace into this directory.
        #[arg(long)]
        record_dir: Option<PathBuf>,
    },
    /// Run a headless session from a gesture script.
    Simulate {
        #[arg(long)]
        preset: String,
        #[arg(long)]
        gesture: PathBuf,
        #[arg(long)]
        trace_out: PathBuf,
        /// Also write the assessment report (JSON).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Re-run the 1 kHz servo over a recorded trace.
    Replay {
        #[arg(long)]
        trace: PathBuf,
        /// Baked mesh file; defaults to the trace's preset.
        #[arg(long)]
        mesh: Option<PathBuf>,
        /// Write every servo tick as CSV.
        #[arg(long)]
        full_rate_out: Option<PathBuf>,
    },
    /// Build the cone force map of a trace.
    Forcemap {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = MapFormat::Mesh)]
        format: MapFormat,
        /// Cone height per newton (m/N).
        #[arg(long)]
        ch: Option<f64>,
        /// Cone radius per newton (m/N).
        #[arg(long)]
        cr: Option<f64>,
        #[arg(long)]
        segments: Option<usize>,
    },
    /// Segment taps, compute statistics and classify a trace.
    Assess {
        #[arg(long)]
        trace: PathBuf,
        /// Write the report here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Generate a synthetic expert or novice trace.
    Synth {
        #[arg(long, value_enum)]
        profile: ProfileArg,
        #[arg(long, default_value_t = 10)]
        taps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pathology presets.
    Presets {
        #[command(subcommand)]
        command: PresetCommand,
    },
}

#[derive(Subcommand)]
enum PresetCommand {
    /// List preset names and descriptions.
    List,
    /// Write a preset's baked mesh (format from the extension: .obj or .ply).
    Bake {
        #[arg(long)]
        name: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MapFormat {
    Mesh,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Expert,
    Novice,
}

impl From<ProfileArg> for Profile {
    fn from(p: ProfileArg) -> Self {
        match p {
            ProfileArg::Expert => Profile::Expert,
            ProfileArg::Novice => Profile::Novice,
        }
    }
}

fn store(cli: &Cli) -> AssetStore {
    match &cli.assets {
        Some(dir) => AssetStore::new(dir),
        None => AssetStore::from_env(),
    }
}

fn write_json(value: &AssessmentReport, path: Option<&Path>) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    match path {
        Some(p) => std::fs::write(p, text + "\n").map_err(io_err(p.display().to_string())),
        None => writeln!(std::io::stdout().lock(), "{text}").map_err(io_err("stdout")),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(path) => SimConfig::load(path)?,
        None => SimConfig::default(),
    };
    match &cli.command {
        Command::Serve { bind, record_dir } => {
            let library = PresetLibrary::load(store(&cli))?;
            if let Some(dir) = record_dir {
                std::fs::create_dir_all(dir).map_err(io_err(dir.display().to_string()))?;
            }
            let handle = spawn_server(bind.as_str(), ServerState::new(library, config, record_dir.clone()))
                .map_err(io_err(format!("bind {bind}")))?;
            eprintln!("palpa: serving on ws://{}", handle.local_addr());
            handle.wait();
        }
        Command::Simulate {
            preset,
            gesture,
            trace_out,
            report,
        } => {
            let library = PresetLibrary::load(store(&cli))?;
            let instance = library.instantiate(preset)?;
            let script = std::fs::read_to_string(gesture).map_err(io_err(gesture.display().to_string()))?;
            let events = parse_gesture_script(&script)?;
            let run = run_session(&instance, SessionSettings::from(&config), &events, Some(trace_out))?;
            let s = &run.summary;
            eprintln!(
                "palpa: {} ticks, {} samples, {} taps, {} state messages, servo mean {:.1} us / p99 {:.1} us, {:?}",
                s.stats.count(),
                s.trace.len(),
                s.taps.len(),
                run.messages.len(),
                s.stats.mean() * 1e6,
                s.stats.percentile(0.99) * 1e6,
                s.report.classification
            );
            if let Some(path) = report {
                write_json(&s.report, Some(path))?;
            }
        }
        Command::Replay {
            trace,
            mesh,
            full_rate_out,
        } => {
            let trace = load_trace(trace)?;
            let mesh = match mesh {
                Some(path) => Arc::new(load_mesh_auto(path)?),
                None => PresetLibrary::load(store(&cli))?.instantiate(&trace.header.preset)?.mesh,
            };
            let scene = HapticScene::new(mesh, trace.header.material);
            let outputs = replay(&trace, &scene);
            let mut worst: f64 = 0.0;
            for (i, s) in trace.samples.iter().enumerate() {
                worst = worst.max((outputs[10 * i].force - s.force).norm());
            }
            eprintln!(
                "palpa: replayed {} ticks from {} samples; max |F_replay - F_recorded| at samples = {worst:e} N",
                outputs.len(),
                trace.len()
            );
            if let Some(path) = full_rate_out {
                let file = File::create(path).map_err(io_err(path.display().to_string()))?;
                let mut out = BufWriter::new(file);
                let base = trace.samples.first().map_or(0.0, |s| s.t);
                let write = |out: &mut BufWriter<File>| -> std::io::Result<()> {
                    writeln!(out, "t,fx,fy,fz,contact,penetration")?;
                    for (k, o) in outputs.iter().enumerate() {
                        let (contact, pen) = o.contact.map_or((0, 0.0), |c| (1, c.penetration));
                        let t = base + k as f64 / 1000.0;
                        writeln!(out, "{t},{},{},{},{contact},{pen}", o.force.x, o.force.y, o.force.z)?;
                    }
                    out.flush()
                };
                write(&mut out).map_err(io_err(path.display().to_string()))?;
            }
        }
        Command::Forcemap {
            trace,
            out,
            format,
            ch,
            cr,
            segments,
        } => {
            let trace = load_trace(trace)?;
            let mut scale = config.force_map;
            scale.c_h = ch.unwrap_or(scale.c_h);
            scale.c_r = cr.unwrap_or(scale.c_r);
            scale.segments = segments.unwrap_or(scale.segments);
            scale.validate()?;
            let taps = segment_taps(&trace, config.band.f_on, config.band.f_off);
            let cones = build_cones(&trace, &taps, scale.c_h, scale.c_r)?;
            let format = match format {
                MapFormat::Mesh => "mesh",
                MapFormat::Text => "text",
            };
            export_cones(&cones, out, format, scale.segments)?;
            eprintln!("palpa: {} cones -> {}", cones.len(), out.display());
        }
        Command::Assess { trace, report } => {
            let trace = load_trace(trace)?;
            let result = assess(&trace, &config.band, &config.classifier);
            write_json(&result, report.as_deref())?;
        }
        Command::Synth {
            profile,
            taps,
            seed,
            out,
        } => {
            if *taps == 0 {
                return Err(CliError::Usage("--taps must be at least 1".into()));
            }
            save_trace(&synth_trace((*profile).into(), *taps, *seed), out)?;
        }
        Command::Presets { command } => {
            let library = PresetLibrary::load(store(&cli))?;
            match command {
                PresetCommand::List => {
                    for p in library.presets() {
                        println!("{:<10} {}", p.name, p.description);
                    }
                }
                PresetCommand::Bake { name, out } => {
                    let format = MeshFormat::from_path(out).ok_or_else(|| {
                        CliError::Usage(format!("cannot infer mesh format from {}", out.display()))
                    })?;
                    let instance = library.instantiate(name)?;
                    save_mesh(&instance.mesh, out, format)?;
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("palpa: {e}");
            ExitCode::FAILURE
        }
    }
}
