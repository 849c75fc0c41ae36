//! Recursive Bayesian goal inference and action blending.
//!
//! Each goal has a proportional policy proposing an end-effector displacement.
//! The human command is scored against every policy with a mix of a
//! multi-step sequence similarity and an instantaneous direction similarity;
//! those scores drive the posterior, whose top-two gap is the confidence.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::cap_norm;
use crate::Vec2;

pub const HISTORY_LEN: usize = 6;

const NORM_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Goal {
    pub id: String,
    pub position: Vec2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GoalSet {
    goals: Vec<Goal>,
}

impl GoalSet {
    pub fn new(goals: Vec<Goal>) -> Result<Self> {
        if goals.len() < 2 {
            return Err(Error::InvalidParam { name: "goals", reason: "need at least two goals".into() });
        }
        for (i, g) in goals.iter().enumerate() {
            if goals[..i].iter().any(|o| o.id == g.id) {
                return Err(Error::InvalidParam { name: "goals", reason: format!("duplicate id `{}`", g.id) });
            }
            if !(g.position.x.is_finite() && g.position.y.is_finite()) {
                return Err(Error::NonFinite("goal position"));
            }
        }
        Ok(Self { goals })
    }

    pub fn len(&self) -> usize {
        self.goals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.goals.is_empty()
    }

    pub fn goals(&self) -> &[Goal] {
        &self.goals
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.goals
            .iter()
            .position(|g| g.id == id)
            .ok_or_else(|| Error::UnknownGoal(id.to_string()))
    }

    pub fn position(&self, index: usize) -> Vec2 {
        self.goals[index].position
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalBelief {
    pub posterior: Vec<f64>,
    pub confidence: f64,
    /// Index of the most probable goal.
    pub predicted: usize,
}

impl GoalBelief {
    pub fn uniform(n: usize) -> Self {
        Self::from_posterior(vec![1.0 / n as f64; n])
    }

    /// Derives confidence and the predicted goal from a normalised posterior.
    pub fn from_posterior(posterior: Vec<f64>) -> Self {
        let mut best = 0;
        for (i, p) in posterior.iter().enumerate() {
            if *p > posterior[best] {
                best = i;
            }
        }
        let runner_up = posterior
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != best)
            .map(|(_, p)| *p)
            .fold(f64::NEG_INFINITY, f64::max);
        let confidence = if runner_up.is_finite() { (posterior[best] - runner_up).clamp(0.0, 1.0) } else { 1.0 };
        Self { posterior, confidence, predicted: best }
    }
}

/// Sliding window of the last [`HISTORY_LEN`] human commands and of every
/// goal policy's proposals, zero-padded until full.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandHistory {
    human: VecDeque<Vec2>,
    policies: Vec<VecDeque<Vec2>>,
}

impl CommandHistory {
    pub fn new(n_goals: usize) -> Self {
        let zeros = || VecDeque::from(vec![Vec2::zeros(); HISTORY_LEN]);
        Self { human: zeros(), policies: (0..n_goals).map(|_| zeros()).collect() }
    }

    pub fn push(&mut self, a_h: Vec2, policy_actions: &[Vec2]) {
        debug_assert_eq!(policy_actions.len(), self.policies.len());
        self.human.pop_front();
        self.human.push_back(a_h);
        for (hist, a) in self.policies.iter_mut().zip(policy_actions) {
            hist.pop_front();
            hist.push_back(*a);
        }
    }

    /// Oldest-first human commands.
    pub fn human(&self) -> Vec<Vec2> {
        self.human.iter().copied().collect()
    }

    pub fn policy(&self, goal: usize) -> Vec<Vec2> {
        self.policies[goal].iter().copied().collect()
    }

    pub fn n_goals(&self) -> usize {
        self.policies.len()
    }
}

/// Maps a command sequence to an embedding compared by cosine similarity.
pub trait Encoder: Send + Sync {
    fn encode(&self, sequence: &[Vec2]) -> Vec<f64>;
}

/// Flattens the sequence into `[x0, y0, x1, y1, ...]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityEncoder;

impl Encoder for IdentityEncoder {
    fn encode(&self, sequence: &[Vec2]) -> Vec<f64> {
        sequence.iter().flat_map(|v| [v.x, v.y]).collect()
    }
}

impl<F> Encoder for F
where
    F: Fn(&[Vec2]) -> Vec<f64> + Send + Sync,
{
    fn encode(&self, sequence: &[Vec2]) -> Vec<f64> {
        self(sequence)
    }
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na < NORM_EPS || nb < NORM_EPS {
        return 0.0;
    }
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    /// Proportional gain from goal error to commanded displacement (1/tick).
    pub gain: f64,
    /// Largest displacement a policy may command per tick (m).
    pub step_max: f64,
}

impl Default for PolicyParams {
    fn default() -> Self {
        Self { gain: 0.2, step_max: 0.01 }
    }
}

/// Scripted goal-directed policy: `gain·(goal − x)` capped at `step_max`.
pub fn goal_policy(goal: &str, x: Vec2, goals: &GoalSet, params: &PolicyParams) -> Result<Vec2> {
    let idx = goals.index_of(goal)?;
    Ok(policy_action(goals.position(idx), x, params))
}

pub fn policy_action(goal_pos: Vec2, x: Vec2, params: &PolicyParams) -> Vec2 {
    cap_norm((goal_pos - x) * params.gain, params.step_max)
}

/// Every goal's policy proposal at position `x`, in goal order.
pub fn policy_actions(goals: &GoalSet, x: Vec2, params: &PolicyParams) -> Vec<Vec2> {
    goals.goals().iter().map(|g| policy_action(g.position, x, params)).collect()
}

pub fn sim_dir(a_h: Vec2, a_g: Vec2) -> f64 {
    cosine(a_h.as_slice(), a_g.as_slice())
}

pub fn sim_enc(hist: &CommandHistory, goal: usize, encoder: &dyn Encoder) -> f64 {
    cosine(&encoder.encode(&hist.human()), &encoder.encode(&hist.policy(goal)))
}

/// Unnormalised per-goal likelihood `exp(γ·sim_enc + (1 − γ)·sim_dir)`.
///
/// `hist` must already contain the current tick's commands.
pub fn likelihood(
    hist: &CommandHistory,
    a_h: Vec2,
    policy_actions: &[Vec2],
    gamma: f64,
    encoder: &dyn Encoder,
) -> Vec<f64> {
    policy_actions
        .iter()
        .enumerate()
        .map(|(g, a_g)| (gamma * sim_enc(hist, g, encoder) + (1.0 - gamma) * sim_dir(a_h, *a_g)).exp())
        .collect()
}

/// Posterior update with a probability floor so abandoned goals can recover.
pub fn bayes_update(prior: &[f64], weights: &[f64], floor: f64) -> Result<GoalBelief> {
    if prior.len() != weights.len() || prior.is_empty() {
        return Err(Error::InvalidParam { name: "weights", reason: "length mismatch".into() });
    }
    let mut post: Vec<f64> = prior.iter().zip(weights).map(|(p, w)| p * w).collect();
    normalize(&mut post)?;
    for p in &mut post {
        *p = p.max(floor);
    }
    normalize(&mut post)?;
    Ok(GoalBelief::from_posterior(post))
}

fn normalize(p: &mut [f64]) -> Result<()> {
    let sum: f64 = p.iter().sum();
    if !(sum.is_finite() && sum > 0.0) {
        return Err(Error::NonFinite("posterior"));
    }
    p.iter_mut().for_each(|v| *v /= sum);
    Ok(())
}

/// Posterior-weighted mixture of the goal policies.
pub fn robot_action(belief: &GoalBelief, policy_actions: &[Vec2]) -> Vec2 {
    belief
        .posterior
        .iter()
        .zip(policy_actions)
        .fold(Vec2::zeros(), |acc, (p, a)| acc + a * *p)
}

pub fn beta_schedule(confidence: f64, beta_max: f64) -> f64 {
    beta_max * confidence.clamp(0.0, 1.0)
}

pub fn blend(a_h: Vec2, a_r: Vec2, beta: f64) -> Vec2 {
    a_h * (1.0 - beta) + a_r * beta
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InferenceParams {
    pub gamma: f64,
    pub beta_max: f64,
    pub posterior_floor: f64,
    pub policy: PolicyParams,
}

impl Default for InferenceParams {
    fn default() -> Self {
        Self { gamma: 0.5, beta_max: 0.6, posterior_floor: 1e-4, policy: PolicyParams::default() }
    }
}

impl InferenceParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: &str| Err(Error::InvalidParam { name, reason: reason.into() });
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("gamma", "must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.beta_max) {
            return bad("beta_max", "must lie in [0, 1]");
        }
        if !(self.posterior_floor >= 0.0 && self.posterior_floor < 1.0) {
            return bad("posterior_floor", "must lie in [0, 1)");
        }
        if !(self.policy.gain > 0.0 && self.policy.step_max > 0.0) {
            return bad("policy", "gain and step_max must be positive");
        }
        Ok(())
    }
}
