//! Plain-Rust implementations behind the browser bindings, kept separate
//! so they can be tested natively.

use iagf_core::field::{field_boundary, FieldMode, FieldSpec};
use iagf_core::kinematics::{manipulability, ArmGeometry, JointConfig};
use iagf_core::scenario::{run_episode, EpisodeMetrics, Method};
use iagf_core::{Config, Error, Result, Vec2};
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct FieldShape {
    /// Boundary as `[x0, y0, x1, y1, ...]` around the origin.
    pub points: Vec<f64>,
    /// `d2` after clamping.
    pub d2: f64,
    pub d_min: f64,
    pub d_max: f64,
}

pub fn field_shape(mode: &str, d1: f64, d2: f64, angle_deg: f64, n: usize) -> Result<FieldShape> {
    let mode = match mode {
        "passive" => FieldMode::Passive,
        "active" => FieldMode::Active,
        other => return Err(Error::Config(format!("unknown field mode `{other}`"))),
    };
    let a = angle_deg.to_radians();
    let spec = FieldSpec::new(mode, d1, d2, Vec2::new(a.cos(), a.sin()))?;
    let points = field_boundary(&spec, n).iter().flat_map(|p| [p.x, p.y]).collect();
    Ok(FieldShape { points, d2: spec.d2, d_min: spec.d_min(), d_max: spec.d_max() })
}

/// Manipulability of a base-centred 2R arm on an `n × n` grid spanning
/// `[-reach, reach]²`, row-major from the top-left. Unreachable cells are NaN.
pub fn manipulability_map(l1: f64, l2: f64, n: usize) -> Result<Vec<f64>> {
    let geom = ArmGeometry::new(vec![l1, l2], Vec2::zeros())?;
    let reach = geom.reach();
    let inner = (l1 - l2).abs();
    let n = n.max(2);
    let mut out = Vec::with_capacity(n * n);
    for row in 0..n {
        let y = reach - 2.0 * reach * row as f64 / (n - 1) as f64;
        for col in 0..n {
            let x = -reach + 2.0 * reach * col as f64 / (n - 1) as f64;
            let r = x.hypot(y);
            if r > reach || r < inner {
                out.push(f64::NAN);
                continue;
            }
            // the elbow angle alone fixes m for two links
            let c2 = ((r * r - l1 * l1 - l2 * l2) / (2.0 * l1 * l2)).clamp(-1.0, 1.0);
            out.push(manipulability(&geom, &JointConfig(vec![0.0, c2.acos()])));
        }
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
pub struct GoalView {
    pub id: String,
    pub position: Vec2,
}

#[derive(Debug, Serialize)]
pub struct Trajectory {
    pub scenario: String,
    pub method: Method,
    pub goals: Vec<GoalView>,
    pub link_lengths: Vec<f64>,
    pub m_th: f64,
    pub m_crit: f64,
    pub dt: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub m: Vec<f64>,
    pub confidence: Vec<f64>,
    pub force: Vec<f64>,
    pub target: Vec<usize>,
    /// Joint angles of the final tick.
    pub q: Vec<f64>,
    pub metrics: EpisodeMetrics,
}

pub fn simulate(scenario: &str, method: &str, seed: u64, noise_deg: f64) -> Result<Trajectory> {
    let mut cfg = Config::default();
    cfg.operator.noise_deg = noise_deg;
    cfg.validate()?;
    let method: Method = method.parse()?;
    let sc = cfg.scenario(scenario)?;
    let r = run_episode(&cfg, &sc, method, seed)?;
    let q = r.log.last().map(|t| t.q.0.clone()).unwrap_or_default();
    Ok(Trajectory {
        scenario: sc.name.clone(),
        method,
        goals: sc.goals.goals().iter().map(|g| GoalView { id: g.id.clone(), position: g.position }).collect(),
        link_lengths: cfg.arm.link_lengths.clone(),
        m_th: cfg.singf.m_th,
        m_crit: cfg.singf.m_crit,
        dt: cfg.impedance.dt,
        x: r.log.iter().map(|t| t.x.x).collect(),
        y: r.log.iter().map(|t| t.x.y).collect(),
        m: r.log.iter().map(|t| t.m).collect(),
        confidence: r.log.iter().map(|t| t.belief.confidence).collect(),
        force: r.log.iter().map(|t| t.f_c.norm()).collect(),
        target: r.log.iter().map(|t| t.target).collect(),
        q,
        metrics: r.metrics,
    })
}
