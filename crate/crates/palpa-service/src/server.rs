//! Blocking WebSocket front end: one thread and one [`Session`] per
//! connection.

use std::collections::HashMap;
use std::io;
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use tungstenite::error::CapacityError;
use tungstenite::protocol::WebSocketConfig;
use tungstenite::{Message, WebSocket};

use palpa_core::config::SimConfig;
use palpa_core::pathology::{PathologyError, PresetInstance, PresetLibrary};
use palpa_core::HapticScene;

use crate::gesture::{quat_from_wxyz, Pose};
use crate::protocol::{ClientMessage, ErrorCode, MeshPayload, ServerMessage, MAX_FRAME_BYTES, PROTOCOL_VERSION};
use crate::session::{scene_for, Session, SessionError, SessionSettings};

pub struct ServerState {
    library: PresetLibrary,
    config: SimConfig,
    record_dir: Option<PathBuf>,
    scenes: Mutex<HashMap<String, (Arc<PresetInstance>, Arc<HapticScene>)>>,
    next_session: AtomicU64,
}

impl ServerState {
    pub fn new(library: PresetLibrary, config: SimConfig, record_dir: Option<PathBuf>) -> Self {
        Self {
            library,
            config,
            record_dir,
            scenes: Mutex::new(HashMap::new()),
            next_session: AtomicU64::new(1),
        }
    }

    /// Baked preset and its query structure, built once per preset.
    fn preset(&self, name: &str) -> Result<(Arc<PresetInstance>, Arc<HapticScene>), PathologyError> {
        let key = self.library.get(name)?.name.clone();
        let mut scenes = self.scenes.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(entry) = scenes.get(&key) {
            return Ok(entry.clone());
        }
        let instance = Arc::new(self.library.instantiate(&key)?);
        let scene = scene_for(&instance, &self.config.session.resolver)
            .map_err(|e| PathologyError::Config(e.to_string()))?;
        let entry = (instance, Arc::new(scene));
        scenes.insert(key, entry.clone());
        Ok(entry)
    }
}

fn mesh_payload(instance: &PresetInstance) -> MeshPayload {
    let mesh = &instance.mesh;
    MeshPayload {
        preset: instance.preset.name.clone(),
        name: mesh.name.clone(),
        vertices: mesh.vertices.iter().map(|v| [v.x, v.y, v.z]).collect(),
        normals: mesh.vertex_normals.iter().map(|n| [n.x, n.y, n.z]).collect(),
        triangles: mesh.triangles.clone(),
    }
}

fn session_error(e: SessionError) -> ServerMessage {
    let code = match e {
        SessionError::NonMonotonic { .. } => ErrorCode::NonMonotonicTime,
        SessionError::InvalidPose(_) => ErrorCode::Malformed,
        SessionError::Settings(_) | SessionError::Trace(_) => ErrorCode::Internal,
    };
    ServerMessage::error(code, e.to_string())
}

struct Connection {
    state: Arc<ServerState>,
    session: Option<(String, Session)>,
    closing: bool,
}

impl Connection {
    fn new(state: Arc<ServerState>) -> Self {
        Self {
            state,
            session: None,
            closing: false,
        }
    }

    fn fail(&mut self, code: ErrorCode, reason: impl Into<String>) -> Vec<ServerMessage> {
        if code.is_fatal() {
            self.closing = true;
        }
        vec![ServerMessage::error(code, reason)]
    }

    fn handle_text(&mut self, text: &str) -> Vec<ServerMessage> {
        let message: ClientMessage = match serde_json::from_str(text) {
            Ok(m) => m,
            Err(e) => return self.fail(ErrorCode::Malformed, e.to_string()),
        };
        match message {
            ClientMessage::Hello { version, preset } => self.hello(version, &preset),
            ClientMessage::Pose {
                t,
                position,
                orientation,
                ..
            } => {
                let Some(q) = quat_from_wxyz(orientation) else {
                    return self.fail(ErrorCode::Malformed, "orientation must be a non-zero quaternion");
                };
                let pose = Pose {
                    t,
                    position: position.into(),
                    orientation: q,
                };
                self.with_session(|s| s.push_pose(&pose))
            }
            ClientMessage::Idle { duration } => self.with_session(|s| s.idle(duration)),
            ClientMessage::FetchMesh { preset } => {
                let name = match (preset, &self.session) {
                    (Some(p), _) => p,
                    (None, Some((p, _))) => p.clone(),
                    (None, None) => {
                        return self.fail(ErrorCode::UnexpectedMessage, "fetch_mesh needs a preset before hello")
                    }
                };
                match self.state.preset(&name) {
                    Ok((instance, _)) => vec![ServerMessage::Mesh(mesh_payload(&instance))],
                    Err(e) => self.preset_error(e),
                }
            }
            ClientMessage::Bye => {
                self.closing = true;
                self.finish().into_iter().collect()
            }
        }
    }

    fn preset_error(&mut self, e: PathologyError) -> Vec<ServerMessage> {
        match e {
            PathologyError::UnknownPreset { .. } => self.fail(ErrorCode::UnknownPreset, e.to_string()),
            other => self.fail(ErrorCode::Internal, other.to_string()),
        }
    }

    fn hello(&mut self, version: u32, preset: &str) -> Vec<ServerMessage> {
        if version != PROTOCOL_VERSION {
            return self.fail(
                ErrorCode::UnsupportedVersion,
                format!("protocol version {version} not supported (server speaks {PROTOCOL_VERSION})"),
            );
        }
        if self.session.is_some() {
            return self.fail(ErrorCode::UnexpectedMessage, "session already started");
        }
        let (instance, scene) = match self.state.preset(preset) {
            Ok(entry) => entry,
            Err(e) => return self.preset_error(e),
        };
        let settings = SessionSettings::from(&self.state.config);
        let id = self.state.next_session.fetch_add(1, Ordering::Relaxed);
        let name = instance.preset.name.clone();
        let session = Session::new(scene, &name, instance.kernel, settings.clone()).and_then(|s| {
            match &self.state.record_dir {
                Some(dir) => s.record_to(dir.join(format!("session-{id}-{name}.trace"))),
                None => Ok(s),
            }
        });
        match session {
            Ok(session) => {
                self.session = Some((name.clone(), session));
                vec![ServerMessage::Welcome {
                    version: PROTOCOL_VERSION,
                    preset: name,
                    servo_hz: palpa_core::haptic::SERVO_HZ,
                    publish_hz: settings.publish_hz,
                    band: settings.band,
                    kernel: instance.kernel,
                }]
            }
            Err(e) => vec![session_error(e)],
        }
    }

    fn with_session(
        &mut self,
        f: impl FnOnce(&mut Session) -> Result<Vec<crate::protocol::StateMessage>, SessionError>,
    ) -> Vec<ServerMessage> {
        let Some((_, session)) = self.session.as_mut() else {
            return self.fail(ErrorCode::UnexpectedMessage, "send hello first");
        };
        match f(session) {
            Ok(states) => states.into_iter().map(ServerMessage::State).collect(),
            Err(e) => vec![session_error(e)],
        }
    }

    fn finish(&mut self) -> Option<ServerMessage> {
        let (_, session) = self.session.take()?;
        Some(match session.finish() {
            Ok(summary) => ServerMessage::Report {
                samples: summary.trace.len(),
                report: summary.report,
                cones: summary.cones,
            },
            Err(e) => session_error(e),
        })
    }
}

fn send_all(ws: &mut WebSocket<TcpStream>, messages: &[ServerMessage]) -> tungstenite::Result<()> {
    for m in messages {
        ws.write(Message::Text(m.to_json()))?;
    }
    ws.flush()
}

fn handle_connection(stream: TcpStream, state: Arc<ServerState>) {
    let mut config = WebSocketConfig::default();
    config.max_message_size = Some(MAX_FRAME_BYTES);
    config.max_frame_size = Some(MAX_FRAME_BYTES);
    let Ok(mut ws) = tungstenite::accept_with_config(stream, Some(config)) else {
        return;
    };
    let mut conn = Connection::new(state);
    loop {
        let replies = match ws.read() {
            Ok(Message::Text(text)) => conn.handle_text(&text),
            Ok(Message::Binary(_)) => conn.fail(ErrorCode::Malformed, "binary frames are not supported"),
            Ok(Message::Close(_)) => break,
            Ok(_) => continue,
            Err(tungstenite::Error::Capacity(CapacityError::MessageTooLong { size, max_size })) => {
                conn.fail(ErrorCode::FrameTooLarge, format!("frame of {size} bytes exceeds {max_size}"))
            }
            Err(_) => break,
        };
        if send_all(&mut ws, &replies).is_err() {
            break;
        }
        if conn.closing {
            let _ = ws.close(None);
            // drain until the peer acknowledges the close
            while ws.read().is_ok() {}
            break;
        }
    }
    // flush the trace of a session that ended without `bye`
    conn.finish();
}

pub struct ServerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn shutdown(mut self) {
        self.stop_and_join();
    }

    /// Blocks until the accept loop ends.
    pub fn wait(mut self) {
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }

    fn stop_and_join(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        // wake the blocking accept
        let _ = TcpStream::connect(self.addr);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        if self.thread.is_some() {
            self.stop_and_join();
        }
    }
}

/// Binds `addr` and serves connections on a background thread.
pub fn spawn_server(addr: impl ToSocketAddrs, state: ServerState) -> io::Result<ServerHandle> {
    let listener = TcpListener::bind(addr)?;
    let addr = listener.local_addr()?;
    let stop = Arc::new(AtomicBool::new(false));
    let state = Arc::new(state);
    let flag = stop.clone();
    let thread = std::thread::spawn(move || {
        for stream in listener.incoming() {
            if flag.load(Ordering::SeqCst) {
                break;
            }
            let Ok(stream) = stream else { continue };
            let _ = stream.set_nodelay(true);
            let state = state.clone();
            std::thread::spawn(move || handle_connection(stream, state));
        }
    });
    Ok(ServerHandle {
        addr,
        stop,
        thread: Some(thread),
    })
}
