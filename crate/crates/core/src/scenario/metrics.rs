//! Objective metrics, computed purely from a tick log.

use serde::{Deserialize, Serialize};

use super::{GraspDetector, TickRecord};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::inference::sim_dir;
use crate::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricParams {
    pub r_grasp: f64,
    pub t_hold: f64,
    pub r_align: f64,
    pub dt: f64,
}

impl MetricParams {
    pub fn from_config(cfg: &Config) -> Self {
        Self { r_grasp: cfg.task.r_grasp, t_hold: cfg.task.t_hold, r_align: cfg.task.r_align, dt: cfg.impedance.dt }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub success: bool,
    /// Time of the tick that completed the grasp hold, or the episode length.
    pub completion_time: f64,
    pub disagreement: f64,
    pub alignment_time: f64,
    pub min_manipulability: f64,
}

/// `1 − mean cos(a_h, a_r)` over ticks where both commands are non-zero.
pub fn metric_disagreement(log: &[TickRecord]) -> Result<f64> {
    if log.is_empty() {
        return Err(Error::EmptyLog);
    }
    let (sum, n) = log
        .iter()
        .filter(|r| r.a_h.norm() >= 1e-9 && r.a_r.norm() >= 1e-9)
        .fold((0.0, 0usize), |(s, n), r| (s + sim_dir(r.a_h, r.a_r), n + 1));
    Ok(if n == 0 { 0.0 } else { 1.0 - sum / n as f64 })
}

/// Time spent within `r_align` of `goal`.
pub fn metric_alignment_time(log: &[TickRecord], goal: Vec2, r_align: f64, dt: f64) -> f64 {
    log.iter().filter(|r| (r.x - goal).norm() < r_align).count() as f64 * dt
}

pub fn metric_min_manipulability(log: &[TickRecord]) -> Result<f64> {
    log.iter().map(|r| r.m).reduce(f64::min).ok_or(Error::EmptyLog)
}

/// Recomputes every metric of an episode from its log.
pub fn episode_metrics(log: &[TickRecord], params: &MetricParams) -> Result<EpisodeMetrics> {
    let last = log.last().ok_or(Error::EmptyLog)?;
    let mut grasp = GraspDetector::new(params.r_grasp, params.t_hold, params.dt);
    let success_at = log.iter().position(|r| grasp.update(r.final_target, r.x, r.target_pos));
    let horizon = match success_at {
        Some(i) => &log[..=i],
        None => log,
    };
    let alignment_time = log
        .iter()
        .find(|r| r.final_target)
        .map(|r| metric_alignment_time(horizon, r.target_pos, params.r_align, params.dt))
        .unwrap_or(0.0);
    Ok(EpisodeMetrics {
        success: success_at.is_some(),
        completion_time: success_at.map_or(last.t, |i| log[i].t),
        disagreement: metric_disagreement(log)?,
        alignment_time,
        min_manipulability: metric_min_manipulability(log)?,
    })
}
