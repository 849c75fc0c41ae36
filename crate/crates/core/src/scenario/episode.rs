use serde::{Deserialize, Serialize};

use super::metrics::{episode_metrics, EpisodeMetrics, MetricParams};
use super::{GraspDetector, Method, ScenarioConfig, ScriptedOperator, TaskProgress};
use crate::config::Config;
use crate::error::Result;
use crate::guidance::ActiveField;
use crate::inference::GoalBelief;
use crate::kinematics::JointConfig;
use crate::pipeline::{Pipeline, SimState};
use crate::Vec2;

/// One control tick. Kinematic quantities are the post-step state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub tick: u64,
    pub t: f64,
    pub method: Method,
    /// Goal index the operator was heading for during this tick.
    pub target: usize,
    pub target_pos: Vec2,
    pub final_target: bool,
    /// The target changed at the end of this tick.
    pub switched: bool,
    pub a_h: Vec2,
    pub a_r: Vec2,
    pub a_sa: Vec2,
    pub beta: f64,
    pub f_c: Vec2,
    pub d_h: f64,
    pub belief: GoalBelief,
    pub m: f64,
    pub x: Vec2,
    pub v: Vec2,
    pub q: JointConfig,
    pub fields: Vec<ActiveField>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpisodeStatus {
    Running,
    Succeeded,
    TimedOut,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub scenario: String,
    pub method: Method,
    pub seed: u64,
    #[serde(flatten)]
    pub metrics: EpisodeMetrics,
    #[serde(skip)]
    pub log: Vec<TickRecord>,
}

/// A running task: the shared pipeline plus scenario progress and the log.
///
/// Batch episodes and live sessions both drive this type, one
/// [`Episode::step`] per control tick.
#[derive(Debug, Clone)]
pub struct Episode {
    pipeline: Pipeline,
    sim: SimState,
    scenario: ScenarioConfig,
    progress: TaskProgress,
    grasp: GraspDetector,
    method: Method,
    metric_params: MetricParams,
    t_max: f64,
    status: EpisodeStatus,
    log: Vec<TickRecord>,
}

impl Episode {
    pub fn new(cfg: &Config, scenario: &ScenarioConfig, method: Method) -> Result<Self> {
        let pipeline = Pipeline::from_config(cfg, scenario.goals.clone())?;
        let sim = pipeline.initial_state(scenario.start, &cfg.q_seed());
        let metric_params = MetricParams::from_config(cfg);
        Ok(Self {
            grasp: GraspDetector::new(metric_params.r_grasp, metric_params.t_hold, metric_params.dt),
            progress: TaskProgress::new(scenario),
            scenario: scenario.clone(),
            pipeline,
            sim,
            method,
            metric_params,
            t_max: cfg.task.t_max,
            status: EpisodeStatus::Running,
            log: Vec::new(),
        })
    }

    pub fn pipeline(&self) -> &Pipeline {
        &self.pipeline
    }

    pub fn sim(&self) -> &SimState {
        &self.sim
    }

    pub fn scenario(&self) -> &ScenarioConfig {
        &self.scenario
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn status(&self) -> EpisodeStatus {
        self.status
    }

    pub fn progress(&self) -> &TaskProgress {
        &self.progress
    }

    pub fn target_position(&self) -> Vec2 {
        self.scenario.goals.position(self.progress.target())
    }

    pub fn log(&self) -> &[TickRecord] {
        &self.log
    }

    pub fn metric_params(&self) -> &MetricParams {
        &self.metric_params
    }

    /// Runs one tick with human command `a_h` and logs it.
    pub fn step(&mut self, a_h: Vec2) -> Result<&TickRecord> {
        let target = self.progress.target();
        let target_pos = self.target_position();
        let final_target = self.progress.is_final();
        let x_prev = self.sim.robot.x;

        let out = self.pipeline.tick(&mut self.sim, a_h, self.method)?;
        let robot = &self.sim.robot;
        let switched = self.progress.update(x_prev, robot.x);
        let m = self.pipeline.manipulability(&robot.q);

        if self.grasp.update(final_target, robot.x, target_pos) {
            self.status = EpisodeStatus::Succeeded;
        } else if robot.t >= self.t_max - 1e-9 {
            self.status = EpisodeStatus::TimedOut;
        }

        self.log.push(TickRecord {
            tick: self.sim.tick,
            t: robot.t,
            method: self.method,
            target,
            target_pos,
            final_target,
            switched,
            a_h: out.a_h,
            a_r: out.a_r,
            a_sa: out.a_sa,
            beta: out.beta,
            f_c: out.guidance.f_c,
            d_h: out.guidance.d_h,
            belief: self.sim.belief.clone(),
            m,
            x: robot.x,
            v: robot.v,
            q: robot.q.clone(),
            fields: out.guidance.active_fields,
        });
        Ok(self.log.last().expect("record just pushed"))
    }

    pub fn is_done(&self) -> bool {
        self.status != EpisodeStatus::Running
    }

    /// Metrics over the log so far.
    pub fn metrics(&self) -> Result<EpisodeMetrics> {
        episode_metrics(&self.log, &self.metric_params)
    }

    pub fn finish(self, seed: u64) -> Result<EpisodeResult> {
        let metrics = episode_metrics(&self.log, &self.metric_params)?;
        Ok(EpisodeResult { scenario: self.scenario.name, method: self.method, seed, metrics, log: self.log })
    }
}

/// Runs a scripted episode to success or timeout.
pub fn run_episode(cfg: &Config, scenario: &ScenarioConfig, method: Method, seed: u64) -> Result<EpisodeResult> {
    let mut episode = Episode::new(cfg, scenario, method)?;
    let mut operator =
        ScriptedOperator::new(seed, cfg.operator.gain, cfg.inference.step_max, cfg.operator.noise_deg);
    while !episode.is_done() {
        let a_h = operator.command(episode.sim().robot.x, episode.target_position());
        episode.step(a_h)?;
    }
    episode.finish(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noiseless() -> Config {
        let mut cfg = Config::default();
        cfg.operator.noise_deg = 0.0;
        cfg
    }

    #[test]
    fn na_single_goal_succeeds() {
        let cfg = noiseless();
        let sc = cfg.scenario("s1").unwrap();
        let r = run_episode(&cfg, &sc, Method::Na, 0).unwrap();
        assert!(r.metrics.success);
        assert!(r.metrics.completion_time < cfg.task.t_max);
        for rec in &r.log {
            assert_eq!(rec.a_sa, rec.a_h);
            assert_eq!(rec.f_c, Vec2::zeros());
        }
    }

    #[test]
    fn deterministic() {
        let cfg = Config::default();
        let sc = cfg.scenario("s2").unwrap();
        let a = run_episode(&cfg, &sc, Method::Iagf, 5).unwrap();
        let b = run_episode(&cfg, &sc, Method::Iagf, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.log, b.log);
    }

    #[test]
    fn s2_switches_exactly_once() {
        let cfg = noiseless();
        let sc = cfg.scenario("s2").unwrap();
        let r = run_episode(&cfg, &sc, Method::Sa, 0).unwrap();
        let switches: Vec<_> = r.log.iter().filter(|r| r.switched).collect();
        assert_eq!(switches.len(), 1);
        let line = sc.switching_lines[0];
        // the switch happens at the first tick ending past the line
        let first_cross = r.log.iter().position(|rec| line.signed_distance(rec.x) > 0.0).unwrap();
        assert!(r.log[first_cross].switched);
        assert!(r.metrics.success);
    }

    #[test]
    fn time_is_monotone() {
        let cfg = Config::default();
        let sc = cfg.scenario("s3").unwrap();
        let r = run_episode(&cfg, &sc, Method::Iagf, 1).unwrap();
        assert!(r.log.windows(2).all(|w| w[1].t > w[0].t && w[1].tick == w[0].tick + 1));
    }
}
