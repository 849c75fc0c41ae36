use std::net::SocketAddr;
use std::time::{Duration, Instant};

use futures_util::{SinkExt, StreamExt};
use iagf_core::protocol::{self, Body, ConfigPayload, Event, Frame, Hello, Input, SessionMessage, SessionSetup, PROTOCOL_VERSION};
use iagf_core::scenario::{episode_metrics, read_jsonl, MetricParams, Method};
use iagf_core::{Config, Vec2};
use iagf_teleop::ServeConfig;
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{MaybeTlsStream, WebSocketStream};

type Ws = WebSocketStream<MaybeTlsStream<TcpStream>>;

async fn start(log_dir: &std::path::Path) -> SocketAddr {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let serve = ServeConfig::new(Config::default(), log_dir);
    tokio::spawn(iagf_teleop::serve(listener, serve));
    addr
}

struct Client {
    ws: Ws,
    seq: u64,
    last_server_seq: Option<u64>,
}

impl Client {
    async fn connect(addr: SocketAddr) -> Self {
        let (ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/session")).await.unwrap();
        Self { ws, seq: 0, last_server_seq: None }
    }

    async fn send(&mut self, body: Body) {
        let text = protocol::encode(&SessionMessage { seq: self.seq, body }).unwrap();
        self.seq += 1;
        self.ws.send(Message::text(text)).await.unwrap();
    }

    async fn send_raw(&mut self, text: &str) {
        self.ws.send(Message::text(text.to_string())).await.unwrap();
    }

    /// Next server message, or `None` once the connection closes.
    async fn recv(&mut self) -> Option<Body> {
        loop {
            let msg = tokio::time::timeout(Duration::from_secs(5), self.ws.next()).await.expect("server went quiet");
            match msg {
                Some(Ok(Message::Text(t))) => {
                    let msg = protocol::decode(t.as_str()).unwrap();
                    assert!(self.last_server_seq.is_none_or(|p| msg.seq > p), "server seq must increase");
                    self.last_server_seq = Some(msg.seq);
                    return Some(msg.body);
                }
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => return None,
                Some(Ok(_)) => continue,
            }
        }
    }

    async fn recv_until<T>(&mut self, mut f: impl FnMut(Body) -> Option<T>) -> T {
        loop {
            let body = self.recv().await.expect("connection closed early");
            if let Some(t) = f(body) {
                return t;
            }
        }
    }

    async fn handshake(&mut self, method: Method, scenario: &str) -> SessionSetup {
        self.send(Body::Hello(Hello { version: PROTOCOL_VERSION, session_id: None })).await;
        let Some(Body::Hello(h)) = self.recv().await else { panic!("expected hello") };
        assert!(h.session_id.is_some());
        self.send(Body::Config(ConfigPayload { method, scenario: scenario.into(), setup: None })).await;
        let Some(Body::Config(c)) = self.recv().await else { panic!("expected config") };
        c.setup.expect("server fills in the setup")
    }

    async fn input(&mut self, command: Vec2, t: f64) {
        self.send(Body::Input(Input { command, client_time: t })).await;
    }

    /// Sends bye and returns the closing event.
    async fn end(&mut self) -> Event {
        self.send(Body::Bye(iagf_core::protocol::Bye { reason: "done".into() })).await;
        self.recv_until(|b| match b {
            Body::Event(e) if e.name != "started" && e.name != "target" => Some(e),
            _ => None,
        })
        .await
    }
}

fn assert_log_recomputes(event: &Event) {
    let path = event.detail.as_ref().expect("log path in event");
    let log = read_jsonl(path).unwrap();
    assert!(!log.is_empty());
    let recomputed = episode_metrics(&log, &MetricParams::from_config(&Config::default())).unwrap();
    assert_eq!(Some(recomputed), event.metrics);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn ten_second_session_holds_frame_rate() {
    let dir = tempfile::tempdir().unwrap();
    let addr = start(dir.path()).await;
    let mut c = Client::connect(addr).await;
    let setup = c.handshake(Method::Na, "s1").await;
    assert_eq!(setup.frame_rate, 50.0);
    assert_eq!(setup.task, vec!["A".to_string()]);

    // wander in a slow circle so the task never completes
    let start = Instant::now();
    let mut frames = 0u32;
    let mut first: Option<Instant> = None;
    let mut last = start;
    let mut t = 0.0f64;
    while start.elapsed() < Duration::from_secs(10) {
        match c.recv().await.expect("session ended early") {
            Body::Frame(f) => {
                let now = Instant::now();
                if first.is_none() {
                    first = Some(now);
                } else {
                    frames += 1;
                }
                last = now;
                t += 0.02;
                assert_eq!(f.fields, vec![]);
                c.input(Vec2::new(t.cos(), t.sin()) * 0.5, t).await;
            }
            Body::Event(e) => assert!(e.name == "started" || e.name == "target", "unexpected event {e:?}"),
            other => panic!("unexpected {other:?}"),
        }
    }
    let rate = frames as f64 / (last - first.unwrap()).as_secs_f64();
    assert!((rate - 50.0).abs() <= 2.0, "frame rate {rate:.2} Hz");

    let event = c.end().await;
    assert_eq!(event.name, "ended");
    assert_log_recomputes(&event);
    assert!(matches!(c.recv().await, Some(Body::Bye(_))));
}

fn heading(frame: &Frame, goal: Vec2) -> Vec2 {
    let d = goal - frame.state.x;
    if d.norm() > 0.05 {
        d.normalize()
    } else {
        d / 0.05
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn driven_session_finishes_and_persists_log() {
    let dir = tempfile::tempdir().unwrap();
    let addr = start(dir.path()).await;
    let mut c = Client::connect(addr).await;
    let setup = c.handshake(Method::Iagf, "s1").await;
    let goal = setup.goals.iter().find(|g| g.id == "A").unwrap().position;

    let mut saw_field = false;
    let mut t = 0.0;
    let event = loop {
        match c.recv().await.expect("connection closed before the task finished") {
            Body::Frame(f) => {
                saw_field |= !f.fields.is_empty();
                for field in &f.fields {
                    assert_eq!(field.boundary.len(), protocol::BOUNDARY_POINTS);
                }
                t += 0.02;
                c.input(heading(&f, goal), t).await;
            }
            Body::Event(e) if e.name == "finished" => break e,
            Body::Event(_) => {}
            other => panic!("unexpected {other:?}"),
        }
    };
    assert!(saw_field, "IAGF-SA frames should carry guidance fields");
    let metrics = event.metrics.unwrap();
    assert!(metrics.success);
    assert_log_recomputes(&event);
    assert!(matches!(c.recv().await, Some(Body::Bye(_))));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn no_input_holds_position() {
    let dir = tempfile::tempdir().unwrap();
    let addr = start(dir.path()).await;
    let mut c = Client::connect(addr).await;
    c.handshake(Method::Iagf, "s2").await;
    let mut frames = Vec::new();
    while frames.len() < 25 {
        if let Some(Body::Frame(f)) = c.recv().await {
            frames.push(f);
        }
    }
    let x0 = frames[0].state.x;
    for f in &frames {
        assert!((f.state.x - x0).norm() < 1e-12);
        assert_eq!(f.a_h, Vec2::zeros());
        assert_eq!(f.f_c, Vec2::zeros());
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn stale_input_decays_to_zero() {
    let dir = tempfile::tempdir().unwrap();
    let addr = start(dir.path()).await;
    let mut c = Client::connect(addr).await;
    c.handshake(Method::Na, "s1").await;
    c.input(Vec2::new(1.0, 0.0), 0.0).await;
    // one input, then silence: commands stop once it is older than 0.3 s
    let mut moving = 0;
    let mut idle_after = None;
    let t0 = Instant::now();
    while t0.elapsed() < Duration::from_millis(700) {
        if let Some(Body::Frame(f)) = c.recv().await {
            if f.a_h != Vec2::zeros() {
                moving += 1;
                assert!(idle_after.is_none(), "command resumed without new input");
            } else if moving > 0 {
                idle_after.get_or_insert(t0.elapsed());
            }
        }
    }
    assert!(moving > 0);
    let idle_after = idle_after.expect("input never went stale");
    assert!(idle_after >= Duration::from_millis(250) && idle_after <= Duration::from_millis(450), "{idle_after:?}");
}

#[tokio::test]
async fn malformed_message_closes_only_that_session() {
    let dir = tempfile::tempdir().unwrap();
    let addr = start(dir.path()).await;

    let mut bad = Client::connect(addr).await;
    bad.send_raw("{not json").await;
    let Some(Body::Event(e)) = bad.recv().await else { panic!("expected an error event") };
    assert_eq!(e.name, "error");
    assert!(bad.recv().await.is_none());

    let mut mid = Client::connect(addr).await;
    mid.handshake(Method::Sa, "s1").await;
    mid.send_raw(r#"{"seq":99,"kind":"input","payload":{"command":[1.0]}}"#).await;
    let e = mid.recv_until(|b| match b {
        Body::Event(e) if e.name == "error" => Some(e),
        _ => None,
    })
    .await;
    assert!(e.detail.unwrap().contains("malformed"));

    let mut good = Client::connect(addr).await;
    good.handshake(Method::Sa, "s3").await;
    let e = good.end().await;
    assert_eq!(e.name, "ended");
}

#[tokio::test]
async fn protocol_violations_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let addr = start(dir.path()).await;

    let mut c = Client::connect(addr).await;
    c.send(Body::Hello(Hello { version: PROTOCOL_VERSION + 1, session_id: None })).await;
    let Some(Body::Event(e)) = c.recv().await else { panic!() };
    assert!(e.detail.unwrap().contains("version"));

    let mut c = Client::connect(addr).await;
    c.send(Body::Hello(Hello { version: PROTOCOL_VERSION, session_id: None })).await;
    c.recv().await;
    c.send(Body::Config(ConfigPayload { method: Method::Na, scenario: "s9".into(), setup: None })).await;
    let Some(Body::Event(e)) = c.recv().await else { panic!() };
    assert_eq!(e.name, "error");

    let mut c = Client::connect(addr).await;
    c.handshake(Method::Na, "s1").await;
    c.seq = 0;
    c.input(Vec2::new(1.0, 0.0), 0.0).await;
    let e = c
        .recv_until(|b| match b {
            Body::Event(e) if e.name == "error" => Some(e),
            _ => None,
        })
        .await;
    assert!(e.detail.unwrap().contains("seq"));
}
