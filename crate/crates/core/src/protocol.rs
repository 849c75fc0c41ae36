//! JSON messages exchanged between the session service and its clients.
//!
//! Every message is `{"seq": n, "kind": ..., "payload": {...}}`; `seq`
//! increases strictly per direction. See `docs/protocol.md`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{field_boundary, FieldSpec};
use crate::guidance::FieldLabel;
use crate::inference::GoalBelief;
use crate::kinematics::{joint_positions, ArmGeometry, JointConfig};
use crate::scenario::{EpisodeMetrics, Method, TickRecord};
use crate::Vec2;

pub const PROTOCOL_VERSION: u32 = 1;

/// Samples per field boundary polyline in frames.
pub const BOUNDARY_POINTS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMessage {
    pub seq: u64,
    #[serde(flatten)]
    pub body: Body,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "lowercase")]
pub enum Body {
    Hello(Hello),
    Config(ConfigPayload),
    Input(Input),
    Frame(Box<Frame>),
    Event(Event),
    Bye(Bye),
}

impl Body {
    pub fn kind(&self) -> &'static str {
        match self {
            Body::Hello(_) => "hello",
            Body::Config(_) => "config",
            Body::Input(_) => "input",
            Body::Frame(_) => "frame",
            Body::Event(_) => "event",
            Body::Bye(_) => "bye",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hello {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session_id: Option<String>,
}

/// Sent by the client to pick a method and scenario; echoed back by the
/// server with `setup` filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigPayload {
    pub method: Method,
    pub scenario: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub setup: Option<SessionSetup>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalInfo {
    pub id: String,
    pub position: Vec2,
}

/// Static scene description a client needs to render frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSetup {
    pub goals: Vec<GoalInfo>,
    /// Goal ids in task order.
    pub task: Vec<String>,
    pub link_lengths: Vec<f64>,
    pub base: Vec2,
    pub m_th: f64,
    pub m_crit: f64,
    pub c_th: f64,
    pub frame_rate: f64,
    pub sim_dt: f64,
    pub step_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Input {
    /// Unit-disc command; the server scales it by the per-tick step limit.
    pub command: Vec2,
    pub client_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameState {
    pub x: Vec2,
    pub v: Vec2,
    pub q: JointConfig,
    /// Base, every joint, end-effector.
    pub joints: Vec<Vec2>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameField {
    pub label: FieldLabel,
    pub spec: FieldSpec,
    pub d_h: f64,
    /// Boundary points relative to the end-effector.
    pub boundary: Vec<Vec2>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub tick: u64,
    pub t: f64,
    pub state: FrameState,
    pub belief: GoalBelief,
    pub m: f64,
    pub f_c: Vec2,
    pub a_h: Vec2,
    pub a_r: Vec2,
    pub a_sa: Vec2,
    pub target: usize,
    pub fields: Vec<FrameField>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<EpisodeMetrics>,
}

impl Event {
    pub fn named(name: &str) -> Self {
        Self { name: name.to_string(), detail: None, metrics: None }
    }

    pub fn error(detail: impl Into<String>) -> Self {
        Self { name: "error".into(), detail: Some(detail.into()), metrics: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bye {
    pub reason: String,
}

fn contains_null(v: &serde_json::Value) -> bool {
    match v {
        serde_json::Value::Null => true,
        serde_json::Value::Array(a) => a.iter().any(contains_null),
        serde_json::Value::Object(o) => o.values().any(contains_null),
        _ => false,
    }
}

/// Builds a frame message from a tick record.
pub fn frame_encode(seq: u64, rec: &TickRecord, geom: &ArmGeometry) -> Result<SessionMessage> {
    let frame = Frame {
        tick: rec.tick,
        t: rec.t,
        state: FrameState { x: rec.x, v: rec.v, q: rec.q.clone(), joints: joint_positions(geom, &rec.q) },
        belief: rec.belief.clone(),
        m: rec.m,
        f_c: rec.f_c,
        a_h: rec.a_h,
        a_r: rec.a_r,
        a_sa: rec.a_sa,
        target: rec.target,
        fields: rec
            .fields
            .iter()
            .map(|f| FrameField {
                label: f.label,
                spec: f.spec,
                d_h: f.d_h,
                boundary: field_boundary(&f.spec, BOUNDARY_POINTS),
            })
            .collect(),
    };
    // serde_json writes non-finite floats as null and frames carry no
    // optional values, so any null means a non-finite number slipped in
    if contains_null(&serde_json::to_value(&frame)?) {
        return Err(Error::NonFinite("frame"));
    }
    Ok(SessionMessage { seq, body: Body::Frame(Box::new(frame)) })
}

pub fn encode(msg: &SessionMessage) -> Result<String> {
    Ok(serde_json::to_string(msg)?)
}

pub fn decode(text: &str) -> Result<SessionMessage> {
    Ok(serde_json::from_str(text)?)
}
