//! The per-tick control pipeline shared by batch episodes and live sessions.
//!
//! Order within a tick: goal policies → history → Bayesian update → robot
//! action → blending → guidance field → impedance step.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::Result;
use crate::field::FieldMode;
use crate::guidance::{self, FusionParams, GuidanceOutput, IntGfConfig, SinGfConfig, SingularityTrend};
use crate::impedance::{DesiredCommand, ImpedanceModel, RobotState};
use crate::inference::{self, CommandHistory, Encoder, GoalBelief, GoalSet, IdentityEncoder, InferenceParams};
use crate::kinematics::{self, JointConfig};
use crate::scenario::Method;
use crate::Vec2;

#[derive(Clone)]
pub struct Pipeline {
    pub model: ImpedanceModel,
    pub dt: f64,
    pub intgf: IntGfConfig,
    pub singf: SinGfConfig,
    pub fusion: FusionParams,
    pub inference: InferenceParams,
    pub min_input: f64,
    pub goals: GoalSet,
    encoder: Arc<dyn Encoder>,
}

impl std::fmt::Debug for Pipeline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Pipeline").field("dt", &self.dt).field("goals", &self.goals).finish_non_exhaustive()
    }
}

/// Everything the loop mutates from one tick to the next.
#[derive(Debug, Clone)]
pub struct SimState {
    pub robot: RobotState,
    pub belief: GoalBelief,
    pub history: CommandHistory,
    pub trend: SingularityTrend,
    pub int_mode: Option<FieldMode>,
    pub tick: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickOutput {
    pub a_h: Vec2,
    pub a_r: Vec2,
    pub a_sa: Vec2,
    pub beta: f64,
    pub guidance: GuidanceOutput,
}

impl Pipeline {
    pub fn from_config(cfg: &Config, goals: GoalSet) -> Result<Self> {
        Ok(Self {
            model: cfg.impedance_model()?,
            dt: cfg.impedance.dt,
            intgf: cfg.intgf(),
            singf: cfg.singf(),
            fusion: cfg.fusion(),
            inference: cfg.inference(),
            min_input: cfg.field.min_input,
            goals,
            encoder: Arc::new(IdentityEncoder),
        })
    }

    pub fn with_encoder(mut self, encoder: Arc<dyn Encoder>) -> Self {
        self.encoder = encoder;
        self
    }

    /// Initial state at rest at `start`, with joints solved from `q_seed`.
    pub fn initial_state(&self, start: Vec2, q_seed: &JointConfig) -> SimState {
        let geom = &self.model.geometry;
        let q = kinematics::solve_position(geom, q_seed, start, self.model.ik_damping, 0.02, 1e-10, 2000);
        SimState {
            robot: RobotState { x: start, v: Vec2::zeros(), q, t: 0.0 },
            belief: GoalBelief::uniform(self.goals.len()),
            history: CommandHistory::new(self.goals.len()),
            trend: SingularityTrend::default(),
            int_mode: None,
            tick: 0,
        }
    }

    pub fn manipulability(&self, q: &JointConfig) -> f64 {
        kinematics::manipulability(&self.model.geometry, q)
    }

    /// Runs one control tick in place and reports the commands and force used.
    pub fn tick(&self, sim: &mut SimState, a_h: Vec2, method: Method) -> Result<TickOutput> {
        let x = sim.robot.x;
        let actions = inference::policy_actions(&self.goals, x, &self.inference.policy);
        sim.history.push(a_h, &actions);
        let weights = inference::likelihood(&sim.history, a_h, &actions, self.inference.gamma, self.encoder.as_ref());
        sim.belief = inference::bayes_update(&sim.belief.posterior, &weights, self.inference.posterior_floor)?;
        let a_r = inference::robot_action(&sim.belief, &actions);

        let (beta, a_sa) = match method {
            Method::Na => (0.0, a_h),
            Method::Sa | Method::Iagf => {
                let beta = inference::beta_schedule(sim.belief.confidence, self.inference.beta_max);
                (beta, inference::blend(a_h, a_r, beta))
            }
        };
        let x_d = x + a_sa;

        let m = self.manipulability(&sim.robot.q);
        let v_rs = sim.trend.update(m, x);
        let guidance = if method == Method::Iagf {
            self.guidance(sim, a_h, a_r, &actions, m, v_rs, x_d)?
        } else {
            GuidanceOutput::none()
        };

        sim.robot = self.model.step(&sim.robot, &DesiredCommand::at(x_d), guidance.f_c, self.dt)?;
        sim.tick += 1;
        Ok(TickOutput { a_h, a_r, a_sa, beta, guidance })
    }

    #[allow(clippy::too_many_arguments)]
    fn guidance(
        &self,
        sim: &mut SimState,
        a_h: Vec2,
        a_r: Vec2,
        actions: &[Vec2],
        m: f64,
        v_rs: Option<Vec2>,
        x_d: Vec2,
    ) -> Result<GuidanceOutput> {
        let v_h = (a_h.norm() >= self.min_input).then(|| a_h.normalize());
        // robot intent: direction of the blended policy, else of the top goal's policy
        let v_ri = unit(a_r).or_else(|| unit(actions[sim.belief.predicted]));
        let confidence = sim.belief.confidence;
        let int_spec = match v_ri {
            Some(v) => {
                let mode = guidance::intgf_mode_latched(confidence, &self.intgf, sim.int_mode);
                sim.int_mode = Some(mode);
                Some(crate::field::FieldSpec::new(mode, self.intgf.d1, guidance::intgf_d2(confidence, &self.intgf), v)?)
            }
            None => None,
        };
        let sing_spec = guidance::singf_spec(m, v_rs, &self.singf)?;
        guidance::compute_guidance(v_h, int_spec, sing_spec, &sim.robot, x_d, &self.fusion)
    }
}

fn unit(v: Vec2) -> Option<Vec2> {
    let n = v.norm();
    (n >= 1e-9).then(|| v / n)
}
