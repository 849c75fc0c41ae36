//! Scripted experiment harness: scenarios, collaboration methods, episodes,
//! objective metrics and batch suites.

mod episode;
mod log;
mod metrics;
mod operator;
mod suite;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::GoalSet;
use crate::Vec2;

pub use episode::{run_episode, Episode, EpisodeResult, EpisodeStatus, TickRecord};
pub use log::{read_jsonl, write_jsonl, write_jsonl_to};
pub use metrics::{
    episode_metrics, metric_alignment_time, metric_disagreement, metric_min_manipulability, EpisodeMetrics, MetricParams,
};
pub use operator::ScriptedOperator;
pub use suite::{run_suite, CellSummary, EpisodeRow, MetricStats, SuiteResults};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    /// One goal held for the whole task.
    S1,
    /// One switch between two goals.
    S2,
    /// `A → B → A` indecision.
    S3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Pure teleoperation.
    Na,
    /// Action blending only.
    Sa,
    /// Action blending plus the guidance field.
    Iagf,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Na, Method::Sa, Method::Iagf];

    pub fn key(self) -> &'static str {
        match self {
            Method::Na => "na",
            Method::Sa => "sa",
            Method::Iagf => "iagf",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Na => "NA",
            Method::Sa => "SA",
            Method::Iagf => "IAGF-SA",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "na" => Ok(Method::Na),
            "sa" => Ok(Method::Sa),
            "iagf" | "iagf-sa" => Ok(Method::Iagf),
            other => Err(Error::Config(format!("unknown method `{other}`"))),
        }
    }
}

/// A line in the workspace; moving onto the side `normal` points to
/// counts as a crossing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchingLine {
    pub point: Vec2,
    pub normal: Vec2,
}

impl SwitchingLine {
    pub fn new(point: Vec2, normal: Vec2) -> Result<Self> {
        let n = normal.norm();
        if !(n.is_finite() && n > 0.0) || !(point.x.is_finite() && point.y.is_finite()) {
            return Err(Error::Config("switching line needs a finite point and non-zero normal".into()));
        }
        Ok(Self { point, normal: normal / n })
    }

    pub fn signed_distance(&self, x: Vec2) -> f64 {
        (x - self.point).dot(&self.normal)
    }

    pub fn crossed(&self, from: Vec2, to: Vec2) -> bool {
        self.signed_distance(from) <= 0.0 && self.signed_distance(to) > 0.0
    }
}

/// A scenario resolved against a goal set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub kind: ScenarioKind,
    pub goals: GoalSet,
    /// Goal indices visited in order.
    pub sequence: Vec<usize>,
    /// One line per switch; line `k` moves the target from `sequence[k]` to
    /// `sequence[k + 1]`.
    pub switching_lines: Vec<SwitchingLine>,
    pub start: Vec2,
}

impl ScenarioConfig {
    pub fn validate(&self, base: Vec2, reach: f64) -> Result<()> {
        let seq = &self.sequence;
        let ok = match self.kind {
            ScenarioKind::S1 => seq.len() == 1,
            ScenarioKind::S2 => seq.len() == 2 && seq[0] != seq[1],
            ScenarioKind::S3 => seq.len() == 3 && seq[0] == seq[2] && seq[0] != seq[1],
        };
        if !ok {
            return Err(Error::Config(format!("scenario `{}`: goal sequence does not fit {:?}", self.name, self.kind)));
        }
        if self.switching_lines.len() + 1 != seq.len() {
            return Err(Error::Config(format!(
                "scenario `{}`: {} switches need {} switching lines",
                self.name,
                seq.len() - 1,
                seq.len() - 1
            )));
        }
        for l in &self.switching_lines {
            if l.signed_distance(base).abs() > reach {
                return Err(Error::Config(format!("scenario `{}`: switching line misses the workspace", self.name)));
            }
        }
        for g in self.goals.goals() {
            if (g.position - base).norm() > reach {
                return Err(Error::Config(format!("goal `{}` lies outside the arm's reach", g.id)));
            }
        }
        Ok(())
    }

    pub fn final_goal(&self) -> usize {
        *self.sequence.last().expect("validated sequence is non-empty")
    }
}

/// Which goal the operator is currently heading for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskProgress {
    sequence: Vec<usize>,
    lines: Vec<SwitchingLine>,
    phase: usize,
}

impl TaskProgress {
    pub fn new(sc: &ScenarioConfig) -> Self {
        Self { sequence: sc.sequence.clone(), lines: sc.switching_lines.clone(), phase: 0 }
    }

    pub fn target(&self) -> usize {
        self.sequence[self.phase]
    }

    pub fn phase(&self) -> usize {
        self.phase
    }

    pub fn is_final(&self) -> bool {
        self.phase + 1 == self.sequence.len()
    }

    /// Advances to the next goal when the move `from → to` crosses the
    /// current switching line. Returns whether a switch happened.
    pub fn update(&mut self, from: Vec2, to: Vec2) -> bool {
        if self.is_final() {
            return false;
        }
        if self.lines[self.phase].crossed(from, to) {
            self.phase += 1;
            true
        } else {
            false
        }
    }
}

/// Tracks how long the end-effector has stayed inside the grasp radius of
/// the final goal.
#[derive(Debug, Clone, PartialEq)]
pub struct GraspDetector {
    r_grasp: f64,
    hold_ticks: u64,
    inside: u64,
}

impl GraspDetector {
    pub fn new(r_grasp: f64, t_hold: f64, dt: f64) -> Self {
        let hold_ticks = ((t_hold / dt) - 1e-9).ceil().max(1.0) as u64;
        Self { r_grasp, hold_ticks, inside: 0 }
    }

    /// Feeds one tick; returns true once the hold requirement is met.
    pub fn update(&mut self, is_final: bool, x: Vec2, target: Vec2) -> bool {
        if is_final && (x - target).norm() < self.r_grasp {
            self.inside += 1;
        } else {
            self.inside = 0;
        }
        self.inside >= self.hold_ticks
    }
}
