use std::net::TcpStream;

use serde_json::{json, Value};
use tungstenite::stream::MaybeTlsStream;
use tungstenite::{connect, Message, WebSocket};

use palpa_core::config::SimConfig;
use palpa_core::pathology::{AssetStore, PresetLibrary};
use palpa_service::protocol::{ErrorCode, ServerMessage, MAX_FRAME_BYTES};
use palpa_service::{spawn_server, ServerHandle, ServerState};

type Client = WebSocket<MaybeTlsStream<TcpStream>>;

fn server(record_dir: Option<std::path::PathBuf>) -> ServerHandle {
    let library = PresetLibrary::load(AssetStore::new(AssetStore::bundled_root())).unwrap();
    spawn_server("127.0.0.1:0", ServerState::new(library, SimConfig::default(), record_dir)).unwrap()
}

fn client(handle: &ServerHandle) -> Client {
    connect(format!("ws://{}", handle.local_addr())).unwrap().0
}

fn send(ws: &mut Client, v: Value) {
    ws.send(Message::Text(v.to_string())).unwrap();
}

fn recv(ws: &mut Client) -> ServerMessage {
    loop {
        match ws.read().unwrap() {
            Message::Text(t) => return serde_json::from_str(&t).unwrap(),
            Message::Close(_) => panic!("closed"),
            _ => {}
        }
    }
}

fn expect_error(ws: &mut Client, code: ErrorCode) {
    match recv(ws) {
        ServerMessage::Error { code: c, .. } => assert_eq!(c, code),
        other => panic!("expected error {code:?}, got {other:?}"),
    }
}

/// Upper-surface vertex used as the cyst centre in the shipped presets.
const PROBE: [f64; 3] = [0.061281575787379694, 0.045941644019075585, 0.0];

fn press(ws: &mut Client, depth: f64) -> Vec<ServerMessage> {
    // straight down along -y from 1 cm above, over 1 s
    send(ws, json!({"type":"pose","t":0.0,"position":[PROBE[0], PROBE[1] + 0.01, PROBE[2]]}));
    let mut out = vec![recv(ws)];
    send(ws, json!({"type":"pose","t":1.0,"position":[PROBE[0], PROBE[1] - depth, PROBE[2]]}));
    for _ in 0..60 {
        out.push(recv(ws));
    }
    out
}

#[test]
fn hello_press_bye() {
    let handle = server(None);
    let mut ws = client(&handle);
    send(&mut ws, json!({"type":"hello","version":1,"preset":"healthy"}));
    match recv(&mut ws) {
        ServerMessage::Welcome { preset, publish_hz, .. } => {
            assert_eq!(preset, "healthy");
            assert_eq!(publish_hz, 60.0);
        }
        other => panic!("{other:?}"),
    }
    let states = press(&mut ws, 0.007);
    let last = match states.last().unwrap() {
        ServerMessage::State(s) => s.clone(),
        other => panic!("{other:?}"),
    };
    assert_eq!(last.t, 1.0);
    assert!(last.contact.is_some() && last.deformation.is_some());
    assert!(last.force_magnitude > 2.0 && last.force_magnitude < 2.5, "{}", last.force_magnitude);
    send(&mut ws, json!({"type":"bye"}));
    match recv(&mut ws) {
        ServerMessage::Report { samples, report, .. } => {
            assert_eq!(samples, 101);
            assert_eq!(report.taps.len(), 1);
        }
        other => panic!("{other:?}"),
    }
    handle.shutdown();
}

#[test]
fn protocol_errors() {
    let handle = server(None);
    let mut ws = client(&handle);
    send(&mut ws, json!({"type":"pose","t":0.0,"position":[0,0,0]}));
    expect_error(&mut ws, ErrorCode::UnexpectedMessage);
    ws.send(Message::Text("{not json".into())).unwrap();
    expect_error(&mut ws, ErrorCode::Malformed);
    send(&mut ws, json!({"type":"hello","version":1,"preset":"fibrosis"}));
    expect_error(&mut ws, ErrorCode::UnknownPreset);
    send(&mut ws, json!({"type":"hello","version":1,"preset":"cyst"}));
    assert!(matches!(recv(&mut ws), ServerMessage::Welcome { .. }));
    send(&mut ws, json!({"type":"hello","version":1,"preset":"cyst"}));
    expect_error(&mut ws, ErrorCode::UnexpectedMessage);
    send(&mut ws, json!({"type":"pose","t":1.0,"position":[0,0.2,0]}));
    assert!(matches!(recv(&mut ws), ServerMessage::State(_)));
    send(&mut ws, json!({"type":"pose","t":0.5,"position":[0,0.2,0]}));
    expect_error(&mut ws, ErrorCode::NonMonotonicTime);
    send(&mut ws, json!({"type":"pose","t":2.0,"position":[0,0.2,0],"orientation":[0,0,0,0]}));
    expect_error(&mut ws, ErrorCode::Malformed);
    ws.send(Message::Binary(vec![1, 2, 3])).unwrap();
    expect_error(&mut ws, ErrorCode::Malformed);
    // the session survives non-fatal errors
    send(&mut ws, json!({"type":"idle","duration":0.1}));
    assert!(matches!(recv(&mut ws), ServerMessage::State(_)));
    handle.shutdown();
}

#[test]
fn wrong_version_and_oversized_frames_close_the_connection() {
    let handle = server(None);
    let mut ws = client(&handle);
    send(&mut ws, json!({"type":"hello","version":9,"preset":"healthy"}));
    expect_error(&mut ws, ErrorCode::UnsupportedVersion);
    assert!(matches!(ws.read(), Ok(Message::Close(_)) | Err(_)));

    let mut ws = client(&handle);
    ws.send(Message::Text("x".repeat(MAX_FRAME_BYTES + 1))).unwrap();
    expect_error(&mut ws, ErrorCode::FrameTooLarge);
    handle.shutdown();
}

#[test]
fn mesh_fetch_withholds_material_colours() {
    let handle = server(None);
    let mut ws = client(&handle);
    send(&mut ws, json!({"type":"fetch_mesh","preset":"cyst"}));
    let text = match ws.read().unwrap() {
        Message::Text(t) => t,
        other => panic!("{other:?}"),
    };
    let value: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(value["type"], "mesh");
    assert_eq!(value["triangles"].as_array().unwrap().len(), 2976);
    assert!(value.get("colors").is_none() && value.get("vertex_rgb").is_none());
    send(&mut ws, json!({"type":"fetch_mesh"}));
    expect_error(&mut ws, ErrorCode::UnexpectedMessage);
    handle.shutdown();
}

#[test]
fn concurrent_clients_are_independent() {
    let handle = server(None);
    let run = |preset: &'static str, addr: std::net::SocketAddr| {
        std::thread::spawn(move || {
            let mut ws = connect(format!("ws://{addr}")).unwrap().0;
            send(&mut ws, json!({"type":"hello","version":1,"preset":preset}));
            recv(&mut ws);
            match press(&mut ws, 0.007).pop().unwrap() {
                ServerMessage::State(s) => s.force_magnitude,
                other => panic!("{other:?}"),
            }
        })
    };
    let addr = handle.local_addr();
    let (a, b) = (run("healthy", addr), run("cyst", addr));
    let (fa, fb) = (a.join().unwrap(), b.join().unwrap());
    // same gesture, different presets; each matches a solo run
    let solo = run("healthy", addr).join().unwrap();
    assert_eq!(fa, solo);
    assert!(fb < 0.5 * fa, "cyst {fb} vs healthy {fa}");
    handle.shutdown();
}

#[test]
fn sessions_are_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let handle = server(Some(dir.path().to_path_buf()));
    let mut ws = client(&handle);
    send(&mut ws, json!({"type":"hello","version":1,"preset":"hepatic"}));
    recv(&mut ws);
    press(&mut ws, 0.005);
    send(&mut ws, json!({"type":"bye"}));
    recv(&mut ws);
    drop(ws);
    handle.shutdown();
    let files: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(files.len(), 1);
    let trace = palpa_core::trace::load_trace(&files[0]).unwrap();
    assert_eq!(trace.header.preset, "hepatic");
    assert_eq!(trace.len(), 101);
}
