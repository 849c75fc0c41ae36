//! Simulation configuration, loaded from a TOML file.
//!
//! Every section and key is optional; missing values fall back to the
//! defaults below. `configs/default.toml` in the repository lists them all.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::GuidanceGains;
use crate::guidance::{FusionParams, IntGfConfig, SinGfConfig};
use crate::impedance::{ImpedanceModel, ImpedanceParams};
use crate::inference::{Goal, GoalSet, InferenceParams, PolicyParams};
use crate::kinematics::{ArmGeometry, JointConfig};
use crate::scenario::{Method, ScenarioKind, SwitchingLine};
use crate::Vec2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArmSection {
    pub link_lengths: Vec<f64>,
    pub base: [f64; 2],
    /// Seed configuration for solving the initial joint angles.
    pub q_seed: Option<Vec<f64>>,
    pub ik_damping: f64,
    pub ik_max_step: f64,
}

impl Default for ArmSection {
    fn default() -> Self {
        Self { link_lengths: vec![0.4, 0.4], base: [0.0, 0.0], q_seed: None, ik_damping: 0.05, ik_max_step: 0.05 }
    }
}

/// Gains are given per axis as `[xx, yy]` or as a full row-major 2×2 matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Gain2 {
    Scalar(f64),
    Diagonal([f64; 2]),
    Full([[f64; 2]; 2]),
}

impl Gain2 {
    fn matrix(&self) -> nalgebra::Matrix2<f64> {
        match *self {
            Gain2::Scalar(s) => nalgebra::Matrix2::identity() * s,
            Gain2::Diagonal([a, b]) => nalgebra::Matrix2::new(a, 0.0, 0.0, b),
            Gain2::Full([[a, b], [c, d]]) => nalgebra::Matrix2::new(a, b, c, d),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImpedanceSection {
    pub mass: Gain2,
    pub stiffness: Gain2,
    pub damping: Gain2,
    pub v_max: f64,
    /// Control period (s).
    pub dt: f64,
}

impl Default for ImpedanceSection {
    fn default() -> Self {
        Self {
            mass: Gain2::Scalar(2.0),
            stiffness: Gain2::Scalar(150.0),
            damping: Gain2::Scalar(25.0),
            v_max: 0.5,
            dt: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldSection {
    pub d1: f64,
    pub k_p: f64,
    pub k_d: f64,
    pub alpha: f64,
    pub force_clamp: f64,
    /// Human commands shorter than this (m) carry no direction.
    pub min_input: f64,
}

impl Default for FieldSection {
    fn default() -> Self {
        Self { d1: 2.0, k_p: 80.0, k_d: 10.0, alpha: 4.0, force_clamp: 30.0, min_input: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntGfSection {
    pub c_th: f64,
    pub hysteresis: f64,
}

impl Default for IntGfSection {
    fn default() -> Self {
        Self { c_th: 0.4, hysteresis: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SinGfSection {
    pub m_th: f64,
    pub m_crit: f64,
}

impl Default for SinGfSection {
    fn default() -> Self {
        let d = SinGfConfig::default();
        Self { m_th: d.m_th, m_crit: d.m_crit }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InferenceSection {
    pub gamma: f64,
    pub beta_max: f64,
    pub posterior_floor: f64,
    pub policy_gain: f64,
    pub step_max: f64,
}

impl Default for InferenceSection {
    fn default() -> Self {
        let d = InferenceParams::default();
        Self {
            gamma: d.gamma,
            beta_max: d.beta_max,
            posterior_floor: d.posterior_floor,
            policy_gain: d.policy.gain,
            step_max: d.policy.step_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskSection {
    pub start: [f64; 2],
    pub r_grasp: f64,
    pub t_hold: f64,
    pub t_max: f64,
    pub r_align: f64,
}

impl Default for TaskSection {
    fn default() -> Self {
        Self { start: [0.0, 0.3], r_grasp: 0.02, t_hold: 0.5, t_max: 60.0, r_align: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OperatorSection {
    /// Proportional gain from target error to command (1/tick).
    pub gain: f64,
    /// Standard deviation of the per-tick bearing rotation (degrees).
    pub noise_deg: f64,
}

impl Default for OperatorSection {
    fn default() -> Self {
        Self { gain: 0.2, noise_deg: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalEntry {
    pub id: String,
    pub position: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineEntry {
    pub point: [f64; 2],
    /// Crossing toward this side triggers the switch.
    pub normal: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioEntry {
    pub kind: ScenarioKind,
    pub goal_sequence: Vec<String>,
    #[serde(default)]
    pub switching_lines: Vec<LineEntry>,
    /// Overrides the global goal positions for this scenario.
    #[serde(default)]
    pub goals: Option<Vec<GoalEntry>>,
    #[serde(default)]
    pub start: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteSection {
    pub scenarios: Vec<String>,
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
}

impl Default for SuiteSection {
    fn default() -> Self {
        Self {
            scenarios: vec!["s1".into(), "s2".into(), "s3".into()],
            methods: vec![Method::Na, Method::Sa, Method::Iagf],
            seeds: (0..50).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub arm: ArmSection,
    pub impedance: ImpedanceSection,
    pub field: FieldSection,
    pub intgf: IntGfSection,
    pub singf: SinGfSection,
    pub inference: InferenceSection,
    pub task: TaskSection,
    pub operator: OperatorSection,
    pub goals: Vec<GoalEntry>,
    pub scenarios: BTreeMap<String, ScenarioEntry>,
    pub suite: SuiteSection,
}

fn v2(a: [f64; 2]) -> Vec2 {
    Vec2::new(a[0], a[1])
}

fn line(point: [f64; 2], normal: [f64; 2]) -> LineEntry {
    LineEntry { point, normal }
}

impl Default for Config {
    fn default() -> Self {
        let goals = vec![
            GoalEntry { id: "A".into(), position: [-0.55, 0.55] },
            GoalEntry { id: "B".into(), position: [0.0, 0.78] },
            GoalEntry { id: "C".into(), position: [0.55, 0.55] },
        ];
        let mut scenarios = BTreeMap::new();
        scenarios.insert(
            "s1".into(),
            ScenarioEntry { kind: ScenarioKind::S1, goal_sequence: vec!["A".into()], switching_lines: vec![], goals: None, start: None },
        );
        scenarios.insert(
            "s2".into(),
            ScenarioEntry {
                kind: ScenarioKind::S2,
                goal_sequence: vec!["A".into(), "C".into()],
                switching_lines: vec![line([-0.2, 0.0], [-1.0, 0.0])],
                goals: None,
                start: None,
            },
        );
        scenarios.insert(
            "s3".into(),
            ScenarioEntry {
                kind: ScenarioKind::S3,
                goal_sequence: vec!["A".into(), "B".into(), "A".into()],
                switching_lines: vec![line([-0.2, 0.0], [-1.0, 0.0]), line([0.0, 0.62], [0.0, 1.0])],
                goals: None,
                start: None,
            },
        );
        // s1 with the goal pushed into the low-manipulability band near full reach
        scenarios.insert(
            "edge".into(),
            ScenarioEntry {
                kind: ScenarioKind::S1,
                goal_sequence: vec!["A".into()],
                switching_lines: vec![],
                goals: Some(vec![
                    GoalEntry { id: "A".into(), position: [-0.56, 0.56] },
                    goals[1].clone(),
                    goals[2].clone(),
                ]),
                start: None,
            },
        );
        Self {
            arm: ArmSection::default(),
            impedance: ImpedanceSection::default(),
            field: FieldSection::default(),
            intgf: IntGfSection::default(),
            singf: SinGfSection::default(),
            inference: InferenceSection::default(),
            task: TaskSection::default(),
            operator: OperatorSection::default(),
            goals,
            scenarios,
            suite: SuiteSection::default(),
        }
    }
}

impl Config {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Config(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry()?;
        self.impedance_model()?;
        self.intgf().validate()?;
        self.singf().validate()?;
        self.inference().validate()?;
        let dt = self.impedance.dt;
        if !(dt > 0.0 && dt <= 0.02) {
            return Err(Error::Config(format!("impedance.dt = {dt} outside (0, 0.02]")));
        }
        let f = &self.field;
        if !(f.alpha >= 1.0 && f.force_clamp > 0.0 && f.k_p >= 0.0 && f.k_d >= 0.0 && f.d1 >= 0.0) {
            return Err(Error::Config("field: need alpha >= 1, force_clamp > 0, non-negative gains".into()));
        }
        let t = &self.task;
        if !(t.r_grasp > 0.0 && t.t_hold >= 0.0 && t.t_max > 0.0 && t.r_align >= 0.0) {
            return Err(Error::Config("task: radii and times must be positive".into()));
        }
        if !(self.operator.gain > 0.0 && self.operator.noise_deg >= 0.0) {
            return Err(Error::Config("operator: gain > 0 and noise_deg >= 0 required".into()));
        }
        self.goal_set()?;
        for name in self.scenarios.keys() {
            self.scenario(name)?;
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<ArmGeometry> {
        ArmGeometry::new(self.arm.link_lengths.clone(), v2(self.arm.base))
    }

    pub fn q_seed(&self) -> JointConfig {
        match &self.arm.q_seed {
            Some(q) => JointConfig(q.clone()),
            None => {
                let n = self.arm.link_lengths.len();
                let mut q = vec![0.3; n];
                q[0] = 0.6;
                if n > 1 {
                    q[1] = 1.4;
                }
                JointConfig(q)
            }
        }
    }

    pub fn impedance_model(&self) -> Result<ImpedanceModel> {
        let params = ImpedanceParams {
            mass: self.impedance.mass.matrix(),
            stiffness: self.impedance.stiffness.matrix(),
            damping: self.impedance.damping.matrix(),
        };
        let mut model = ImpedanceModel::new(params, self.geometry()?)?;
        model.v_max = self.impedance.v_max;
        model.ik_damping = self.arm.ik_damping;
        model.ik_max_step = self.arm.ik_max_step;
        if !(model.v_max > 0.0 && model.ik_damping > 0.0 && model.ik_max_step > 0.0) {
            return Err(Error::Config("v_max, ik_damping and ik_max_step must be positive".into()));
        }
        Ok(model)
    }

    pub fn intgf(&self) -> IntGfConfig {
        IntGfConfig { c_th: self.intgf.c_th, d1: self.field.d1, hysteresis: self.intgf.hysteresis }
    }

    pub fn singf(&self) -> SinGfConfig {
        SinGfConfig { m_th: self.singf.m_th, m_crit: self.singf.m_crit, d1: self.field.d1 }
    }

    pub fn fusion(&self) -> FusionParams {
        FusionParams {
            alpha: self.field.alpha,
            gains: GuidanceGains { k_p: self.field.k_p, k_d: self.field.k_d },
            force_clamp: self.field.force_clamp,
        }
    }

    pub fn inference(&self) -> InferenceParams {
        let i = &self.inference;
        InferenceParams {
            gamma: i.gamma,
            beta_max: i.beta_max,
            posterior_floor: i.posterior_floor,
            policy: PolicyParams { gain: i.policy_gain, step_max: i.step_max },
        }
    }

    fn goals_from(entries: &[GoalEntry]) -> Result<GoalSet> {
        GoalSet::new(entries.iter().map(|g| Goal { id: g.id.clone(), position: v2(g.position) }).collect())
    }

    pub fn goal_set(&self) -> Result<GoalSet> {
        Self::goals_from(&self.goals)
    }

    /// Resolves a named scenario against the global goals and task settings.
    pub fn scenario(&self, name: &str) -> Result<crate::scenario::ScenarioConfig> {
        let entry = self
            .scenarios
            .get(name)
            .ok_or_else(|| Error::Config(format!("no scenario named `{name}`")))?;
        let goals = match &entry.goals {
            Some(g) => Self::goals_from(g)?,
            None => self.goal_set()?,
        };
        let sequence = entry
            .goal_sequence
            .iter()
            .map(|id| goals.index_of(id))
            .collect::<Result<Vec<_>>>()?;
        let lines = entry
            .switching_lines
            .iter()
            .map(|l| SwitchingLine::new(v2(l.point), v2(l.normal)))
            .collect::<Result<Vec<_>>>()?;
        let sc = crate::scenario::ScenarioConfig {
            name: name.to_string(),
            kind: entry.kind,
            goals,
            sequence,
            switching_lines: lines,
            start: v2(entry.start.unwrap_or(self.task.start)),
        };
        let geom = self.geometry()?;
        sc.validate(geom.base(), geom.reach())?;
        Ok(sc)
    }
}
