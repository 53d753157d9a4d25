//! Palpation sessions over the engine in `palpa-core`: scripted or
//! networked tool poses drive a simulated 1 kHz servo, state messages go
//! out at the publish rate, and every session is recorded and scored.

pub mod gesture;
pub mod protocol;
pub mod server;
pub mod session;

pub use gesture::{parse_gesture_script, GestureEvent, Pose};
pub use protocol::{ClientMessage, ErrorCode, ServerMessage, StateMessage, PROTOCOL_VERSION};
pub use server::{spawn_server, ServerHandle, ServerState};
pub use session::{run_session, Session, SessionError, SessionSettings, SessionSummary};
