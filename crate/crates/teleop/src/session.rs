use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::extract::ws::{Message, WebSocket};
use futures_util::stream::{SplitSink, SplitStream};
use futures_util::{SinkExt, StreamExt};
use iagf_core::protocol::{
    self, Body, Bye, ConfigPayload, Event, GoalInfo, Hello, SessionMessage, SessionSetup, PROTOCOL_VERSION,
};
use iagf_core::scenario::{write_jsonl, Episode, EpisodeMetrics, EpisodeStatus};
use iagf_core::Vec2;
use tokio::sync::{mpsc, watch};
use tokio::time::MissedTickBehavior;

use crate::AppState;

enum Outgoing {
    Msg(Body),
    Close,
}

#[derive(Debug)]
enum Stop {
    Bye,
    Disconnected,
    Error(String),
}

#[derive(Debug, Clone, Copy)]
struct Received {
    command: Vec2,
    at: Instant,
}

pub(crate) async fn run(socket: WebSocket, state: Arc<AppState>) {
    let (sink, mut stream) = socket.split();
    let (out, out_rx) = mpsc::channel(64);
    let writer = tokio::spawn(write_loop(sink, out_rx));
    let id = state.next_session_id();

    let handshake = tokio::time::timeout(state.serve.handshake_timeout, handshake(&mut stream, &out, &state, &id)).await;
    match handshake {
        Ok(Ok((episode, last_seq))) => {
            tracing::info!(session = %id, scenario = %episode.scenario().name, method = %episode.method(), "session started");
            simulate(episode, stream, last_seq, &out, &state, &id).await;
        }
        Ok(Err(Stop::Error(e))) => send_error(&out, e).await,
        Ok(Err(_)) => {}
        Err(_) => send_error(&out, "handshake timed out".into()).await,
    }
    let _ = out.send(Outgoing::Close).await;
    drop(out);
    let _ = tokio::time::timeout(Duration::from_secs(2), writer).await;
    tracing::info!(session = %id, "session closed");
}

async fn send_error(out: &mpsc::Sender<Outgoing>, detail: String) {
    tracing::warn!(%detail, "session error");
    let _ = out.send(Outgoing::Msg(Body::Event(Event::error(detail)))).await;
}

async fn write_loop(mut sink: SplitSink<WebSocket, Message>, mut rx: mpsc::Receiver<Outgoing>) {
    let mut seq = 0u64;
    while let Some(item) = rx.recv().await {
        let msg = match item {
            Outgoing::Msg(body) => body,
            Outgoing::Close => {
                let _ = sink.send(Message::Close(None)).await;
                break;
            }
        };
        let text = match protocol::encode(&SessionMessage { seq, body: msg }) {
            Ok(t) => t,
            Err(e) => {
                tracing::error!(error = %e, "dropping unencodable message");
                continue;
            }
        };
        seq += 1;
        if sink.send(Message::Text(text.into())).await.is_err() {
            break;
        }
    }
}

/// Next decoded client message; `Err` ends the session.
async fn next_message(stream: &mut SplitStream<WebSocket>, last_seq: &mut Option<u64>) -> Result<Body, Stop> {
    loop {
        let text = match stream.next().await {
            None | Some(Err(_)) | Some(Ok(Message::Close(_))) => return Err(Stop::Disconnected),
            Some(Ok(Message::Text(t))) => t,
            Some(Ok(Message::Binary(_))) => return Err(Stop::Error("binary messages are not supported".into())),
            Some(Ok(_)) => continue,
        };
        let msg = protocol::decode(text.as_str()).map_err(|e| Stop::Error(format!("malformed message: {e}")))?;
        if last_seq.is_some_and(|prev| msg.seq <= prev) {
            return Err(Stop::Error(format!("seq {} does not increase", msg.seq)));
        }
        *last_seq = Some(msg.seq);
        return Ok(msg.body);
    }
}

async fn handshake(
    stream: &mut SplitStream<WebSocket>,
    out: &mpsc::Sender<Outgoing>,
    state: &AppState,
    id: &str,
) -> Result<(Episode, Option<u64>), Stop> {
    let mut last_seq = None;
    match next_message(stream, &mut last_seq).await? {
        Body::Hello(h) if h.version == PROTOCOL_VERSION => {}
        Body::Hello(h) => return Err(Stop::Error(format!("unsupported protocol version {}", h.version))),
        other => return Err(Stop::Error(format!("expected hello, got {}", other.kind()))),
    }
    let hello = Hello { version: PROTOCOL_VERSION, session_id: Some(id.to_string()) };
    out.send(Outgoing::Msg(Body::Hello(hello))).await.map_err(|_| Stop::Disconnected)?;

    let request = match next_message(stream, &mut last_seq).await? {
        Body::Config(c) => c,
        Body::Bye(_) => return Err(Stop::Bye),
        other => return Err(Stop::Error(format!("expected config, got {}", other.kind()))),
    };
    let cfg = &state.serve.config;
    let scenario = cfg.scenario(&request.scenario).map_err(|e| Stop::Error(e.to_string()))?;
    let episode = Episode::new(cfg, &scenario, request.method).map_err(|e| Stop::Error(e.to_string()))?;

    let geom = &episode.pipeline().model.geometry;
    let setup = SessionSetup {
        goals: scenario
            .goals
            .goals()
            .iter()
            .map(|g| GoalInfo { id: g.id.clone(), position: g.position })
            .collect(),
        task: scenario.sequence.iter().map(|&i| scenario.goals.goals()[i].id.clone()).collect(),
        link_lengths: geom.link_lengths().to_vec(),
        base: geom.base(),
        m_th: cfg.singf.m_th,
        m_crit: cfg.singf.m_crit,
        c_th: cfg.intgf.c_th,
        frame_rate: 1.0 / state.serve.frame_period.as_secs_f64(),
        sim_dt: cfg.impedance.dt,
        step_max: cfg.inference.step_max,
    };
    let reply = ConfigPayload { method: request.method, scenario: request.scenario, setup: Some(setup) };
    out.send(Outgoing::Msg(Body::Config(reply))).await.map_err(|_| Stop::Disconnected)?;
    Ok((episode, last_seq))
}

async fn read_loop(
    mut stream: SplitStream<WebSocket>,
    mut last_seq: Option<u64>,
    input: watch::Sender<Option<Received>>,
) -> Stop {
    loop {
        match next_message(&mut stream, &mut last_seq).await {
            Ok(Body::Input(i)) => {
                let c = i.command;
                if !(c.x.is_finite() && c.y.is_finite() && i.client_time.is_finite()) {
                    return Stop::Error("non-finite input".into());
                }
                let command = if c.norm() > 1.0 { c / c.norm() } else { c };
                input.send_replace(Some(Received { command, at: Instant::now() }));
            }
            Ok(Body::Bye(_)) => return Stop::Bye,
            Ok(other) => return Stop::Error(format!("unexpected {} message during a session", other.kind())),
            Err(stop) => return stop,
        }
    }
}

/// Command for the next tick: the latest input scaled to the per-tick step,
/// or zero when nothing fresh has arrived.
fn current_command(input: &watch::Receiver<Option<Received>>, stale_after: Duration, step_max: f64) -> Vec2 {
    match *input.borrow() {
        Some(r) if r.at.elapsed() <= stale_after => r.command * step_max,
        _ => Vec2::zeros(),
    }
}

async fn simulate(
    mut episode: Episode,
    stream: SplitStream<WebSocket>,
    last_seq: Option<u64>,
    out: &mpsc::Sender<Outgoing>,
    state: &AppState,
    id: &str,
) {
    let serve = &state.serve;
    let (input_tx, input_rx) = watch::channel(None);
    let mut reader = tokio::spawn(read_loop(stream, last_seq, input_tx));
    let step_max = serve.config.inference.step_max;
    let geom = episode.pipeline().model.geometry.clone();
    let _ = out.send(Outgoing::Msg(Body::Event(Event::named("started")))).await;

    let mut interval = tokio::time::interval(serve.frame_period);
    interval.set_missed_tick_behavior(MissedTickBehavior::Skip);
    let mut frames = 0u64;
    let stop = loop {
        tokio::select! {
            r = &mut reader => break r.unwrap_or(Stop::Disconnected),
            _ = interval.tick() => {
                let command = current_command(&input_rx, serve.stale_after, step_max);
                let mut failure = None;
                for _ in 0..serve.steps_per_frame {
                    if episode.is_done() {
                        break;
                    }
                    match episode.step(command) {
                        Ok(rec) if rec.switched => {
                            let goal = &episode.scenario().goals.goals()[episode.progress().target()];
                            let ev = Event { name: "target".into(), detail: Some(goal.id.clone()), metrics: None };
                            let _ = out.try_send(Outgoing::Msg(Body::Event(ev)));
                        }
                        Ok(_) => {}
                        Err(e) => {
                            failure = Some(e.to_string());
                            break;
                        }
                    }
                }
                if let Some(e) = failure {
                    break Stop::Error(format!("simulation error: {e}"));
                }
                if let Some(rec) = episode.log().last() {
                    match protocol::frame_encode(frames, rec, &geom) {
                        // a slow client drops frames rather than stalling the loop
                        Ok(msg) => {
                            let _ = out.try_send(Outgoing::Msg(msg.body));
                        }
                        Err(e) => break Stop::Error(format!("frame encoding failed: {e}")),
                    }
                    frames += 1;
                }
                if episode.is_done() {
                    break Stop::Bye;
                }
            }
        }
    };
    reader.abort();

    let status = episode.status();
    let (path, metrics) = persist(&episode, &serve.log_dir, id).await;
    tracing::info!(session = %id, ?stop, ?status, log = ?path, "session ended");
    let name = match status {
        EpisodeStatus::Succeeded => "finished",
        EpisodeStatus::TimedOut => "timeout",
        EpisodeStatus::Running => "ended",
    };
    if let Stop::Error(e) = &stop {
        send_error(out, e.clone()).await;
    }
    if !matches!(stop, Stop::Disconnected) {
        let ev = Event { name: name.into(), detail: path.map(|p| p.display().to_string()), metrics };
        let _ = out.send(Outgoing::Msg(Body::Event(ev))).await;
        let _ = out.send(Outgoing::Msg(Body::Bye(Bye { reason: name.into() }))).await;
    }
}

async fn persist(episode: &Episode, log_dir: &std::path::Path, id: &str) -> (Option<PathBuf>, Option<EpisodeMetrics>) {
    let metrics = episode.metrics().ok();
    let path = log_dir.join(format!("session-{id}.jsonl"));
    let log = episode.log().to_vec();
    let target = path.clone();
    let written = tokio::task::spawn_blocking(move || write_jsonl(&target, &log)).await;
    match written {
        Ok(Ok(())) => (Some(path), metrics),
        Ok(Err(e)) => {
            tracing::error!(error = %e, "could not write session log");
            (None, metrics)
        }
        Err(e) => {
            tracing::error!(error = %e, "log writer panicked");
            (None, metrics)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn latest_input_wins() {
        let (tx, rx) = watch::channel(None);
        let now = Instant::now();
        tx.send_replace(Some(Received { command: Vec2::new(1.0, 0.0), at: now }));
        tx.send_replace(Some(Received { command: Vec2::new(0.0, -1.0), at: now }));
        assert_eq!(current_command(&rx, Duration::from_millis(300), 0.01), Vec2::new(0.0, -0.01));
    }

    #[test]
    fn stale_or_missing_input_is_zero() {
        let (tx, rx) = watch::channel(None);
        assert_eq!(current_command(&rx, Duration::from_millis(300), 0.01), Vec2::zeros());
        let old = Instant::now() - Duration::from_millis(301);
        tx.send_replace(Some(Received { command: Vec2::new(1.0, 0.0), at: old }));
        assert_eq!(current_command(&rx, Duration::from_millis(300), 0.01), Vec2::zeros());
    }
}
