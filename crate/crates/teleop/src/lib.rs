//! Live teleoperation sessions over WebSocket.
//!
//! Each connection on `/session` gets its own simulation loop driven by the
//! same [`iagf_core::scenario::Episode`] used for batch runs. Everything else
//! under `/` is served from a static directory.

use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use axum::extract::{State, WebSocketUpgrade};
use axum::response::Response;
use axum::routing::get;
use axum::Router;
use iagf_core::Config;
use tokio::net::TcpListener;
use tower_http::services::ServeDir;

mod session;

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub config: Config,
    /// Directory receiving one JSONL log per session.
    pub log_dir: PathBuf,
    /// Served at `/`; `None` serves only the WebSocket endpoint.
    pub static_dir: Option<PathBuf>,
    pub frame_period: Duration,
    /// Simulation ticks per frame.
    pub steps_per_frame: usize,
    /// Inputs older than this count as a zero command.
    pub stale_after: Duration,
    /// Time allowed for the hello/config exchange.
    pub handshake_timeout: Duration,
}

impl ServeConfig {
    pub fn new(config: Config, log_dir: impl Into<PathBuf>) -> Self {
        Self {
            config,
            log_dir: log_dir.into(),
            static_dir: None,
            frame_period: Duration::from_millis(20),
            steps_per_frame: 2,
            stale_after: Duration::from_millis(300),
            handshake_timeout: Duration::from_secs(10),
        }
    }
}

pub struct AppState {
    serve: ServeConfig,
    sessions: AtomicU64,
}

impl AppState {
    fn next_session_id(&self) -> String {
        let n = self.sessions.fetch_add(1, Ordering::Relaxed);
        let ms = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0);
        format!("{ms}-{n}")
    }
}

pub fn router(serve: ServeConfig) -> Router {
    let static_dir = serve.static_dir.clone();
    let state = Arc::new(AppState { serve, sessions: AtomicU64::new(0) });
    let app = Router::new().route("/session", get(upgrade)).with_state(state);
    match static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app,
    }
}

async fn upgrade(ws: WebSocketUpgrade, State(state): State<Arc<AppState>>) -> Response {
    ws.on_upgrade(move |socket| session::run(socket, state))
}

/// Serves until the listener fails.
pub async fn serve(listener: TcpListener, serve: ServeConfig) -> std::io::Result<()> {
    std::fs::create_dir_all(&serve.log_dir)?;
    axum::serve(listener, router(serve)).await
}
