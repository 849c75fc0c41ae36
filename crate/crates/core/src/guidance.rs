//! Intent-aware and singularity-aware field instances and their fusion into
//! a single guidance force.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite2, Error, Result};
use crate::field::{self, clamp_d2, FieldMode, FieldSpec, GuidanceGains};
use crate::impedance::RobotState;
use crate::kinematics::cap_norm;
use crate::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntGfConfig {
    pub c_th: f64,
    pub d1: f64,
    /// Width of the confidence band around `c_th` inside which the previous
    /// mode is kept. Zero switches exactly at `c_th`.
    #[serde(default)]
    pub hysteresis: f64,
}

impl Default for IntGfConfig {
    fn default() -> Self {
        Self { c_th: 0.4, d1: 2.0, hysteresis: 0.0 }
    }
}

impl IntGfConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c_th > 0.0 && self.c_th < 1.0) {
            return Err(Error::InvalidParam { name: "c_th", reason: format!("{} not in (0, 1)", self.c_th) });
        }
        if !(self.d1 >= 0.0 && self.hysteresis >= 0.0) {
            return Err(Error::InvalidParam { name: "intgf", reason: "d1 and hysteresis must be >= 0".into() });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinGfConfig {
    pub m_th: f64,
    pub m_crit: f64,
    pub d1: f64,
}

impl Default for SinGfConfig {
    /// Thresholds sized for the default 2 × 0.4 m arm (peak manipulability 0.16).
    fn default() -> Self {
        Self { m_th: 0.08, m_crit: 0.03, d1: 2.0 }
    }
}

impl SinGfConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.m_th > self.m_crit && self.m_crit > 0.0) {
            return Err(Error::InvalidParam {
                name: "singf",
                reason: format!("need m_th > m_crit > 0, got {} and {}", self.m_th, self.m_crit),
            });
        }
        if !(self.d1 >= 0.0) {
            return Err(Error::InvalidParam { name: "singf.d1", reason: "must be >= 0".into() });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FieldLabel {
    #[serde(rename = "IntGF-D")]
    IntGfDamping,
    #[serde(rename = "IntGF-S")]
    IntGfStiffness,
    #[serde(rename = "SinGF-D")]
    SinGfDamping,
    #[serde(rename = "SinGF-S")]
    SinGfStiffness,
}

impl FieldLabel {
    fn intent(mode: FieldMode) -> Self {
        match mode {
            FieldMode::Passive => Self::IntGfDamping,
            FieldMode::Active => Self::IntGfStiffness,
        }
    }

    fn singularity(mode: FieldMode) -> Self {
        match mode {
            FieldMode::Passive => Self::SinGfDamping,
            FieldMode::Active => Self::SinGfStiffness,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActiveField {
    pub label: FieldLabel,
    pub spec: FieldSpec,
    /// Radial length of this field along the human input direction.
    pub d_h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuidanceOutput {
    pub f_c: Vec2,
    /// Mode whose force law produced `f_c`, if any field was applied.
    pub mode: Option<FieldMode>,
    /// Radial length used in the force law (fused when two fields combine).
    pub d_h: f64,
    pub active_fields: Vec<ActiveField>,
}

impl GuidanceOutput {
    pub fn none() -> Self {
        Self { f_c: Vec2::zeros(), mode: None, d_h: 0.0, active_fields: Vec::new() }
    }
}

/// Piecewise `d2(C)`: rises linearly to `d1` below the threshold, restarts
/// from zero at the threshold and rises to `d1` at `C = 1`.
pub fn intgf_d2(c: f64, cfg: &IntGfConfig) -> f64 {
    let c = c.clamp(0.0, 1.0);
    let d2 = if c < cfg.c_th {
        cfg.d1 / cfg.c_th * c
    } else {
        cfg.d1 * (c - cfg.c_th) / (1.0 - cfg.c_th)
    };
    clamp_d2(d2, cfg.d1)
}

pub fn intgf_mode(c: f64, cfg: &IntGfConfig) -> FieldMode {
    if c < cfg.c_th {
        FieldMode::Passive
    } else {
        FieldMode::Active
    }
}

/// Mode selection with the optional hysteresis band around `c_th`.
pub fn intgf_mode_latched(c: f64, cfg: &IntGfConfig, previous: Option<FieldMode>) -> FieldMode {
    let half = 0.5 * cfg.hysteresis;
    match previous {
        Some(prev) if half > 0.0 && (c - cfg.c_th).abs() < half => prev,
        _ => intgf_mode(c, cfg),
    }
}

pub fn intgf_spec(c: f64, v_ri: Vec2, cfg: &IntGfConfig) -> Result<FieldSpec> {
    FieldSpec::new(intgf_mode(c, cfg), cfg.d1, intgf_d2(c, cfg), v_ri)
}

/// `sign(Δm) · Δx̂`, or `None` when either the displacement or the
/// manipulability change is too small to define a direction.
pub fn singf_direction(m_k: f64, m_km1: f64, x_k: Vec2, x_km1: Vec2) -> Option<Vec2> {
    let dx = x_k - x_km1;
    let norm = dx.norm();
    let dm = m_k - m_km1;
    if !(norm >= 1e-6) || !(dm.abs() >= 1e-9) {
        return None;
    }
    Some(dx / norm * dm.signum())
}

/// One-tick memory for the singularity-avoidance direction.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SingularityTrend {
    previous: Option<(f64, Vec2)>,
    direction: Option<Vec2>,
}

impl SingularityTrend {
    /// Records the current sample and returns the direction to use this
    /// tick: the fresh one if defined, otherwise the last defined one.
    pub fn update(&mut self, m: f64, x: Vec2) -> Option<Vec2> {
        if let Some((m_prev, x_prev)) = self.previous {
            if let Some(dir) = singf_direction(m, m_prev, x, x_prev) {
                self.direction = Some(dir);
            }
        }
        self.previous = Some((m, x));
        self.direction
    }

    pub fn direction(&self) -> Option<Vec2> {
        self.direction
    }
}

pub fn singf_d2(m: f64, cfg: &SinGfConfig) -> f64 {
    let d2 = if m > cfg.m_th {
        0.0
    } else if m >= cfg.m_crit {
        cfg.d1 * (cfg.m_th - m) / (cfg.m_th - cfg.m_crit)
    } else {
        cfg.d1 * (cfg.m_crit - m) / cfg.m_crit
    };
    clamp_d2(d2, cfg.d1)
}

pub fn singf_spec(m: f64, v_rs: Option<Vec2>, cfg: &SinGfConfig) -> Result<Option<FieldSpec>> {
    let Some(v_rs) = v_rs else {
        return Ok(None);
    };
    if m > cfg.m_th {
        return Ok(None);
    }
    let mode = if m > cfg.m_crit { FieldMode::Passive } else { FieldMode::Active };
    FieldSpec::new(mode, cfg.d1, singf_d2(m, cfg), v_rs).map(Some)
}

/// Power-sum fusion `(a^α + b^α)^(1/α)`, evaluated relative to the larger
/// argument so large `α` does not overflow.
pub fn fuse_homogeneous(a: f64, b: f64, alpha: f64) -> f64 {
    let hi = a.max(b);
    if hi <= 0.0 {
        return 0.0;
    }
    let lo = a.min(b);
    hi * (1.0 + (lo / hi).powf(alpha)).powf(1.0 / alpha)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionParams {
    pub alpha: f64,
    pub gains: GuidanceGains,
    /// Upper bound on `‖f_c‖` (N).
    pub force_clamp: f64,
}

impl Default for FusionParams {
    fn default() -> Self {
        Self { alpha: 4.0, gains: GuidanceGains::default(), force_clamp: 30.0 }
    }
}

fn mode_force(mode: FieldMode, d_h: f64, state: &RobotState, x_d: Vec2, gains: &GuidanceGains) -> Vec2 {
    match mode {
        FieldMode::Passive => field::passive_force(d_h, state.v, gains),
        FieldMode::Active => field::active_force(d_h, x_d, state.x, gains),
    }
}

/// Combines the intent and singularity fields into the guidance force.
///
/// Same-mode fields are fused through [`fuse_homogeneous`]. When the modes
/// differ only the stiffness field acts and the damping field is dropped.
pub fn compute_guidance(
    v_h: Option<Vec2>,
    int_spec: Option<FieldSpec>,
    sing_spec: Option<FieldSpec>,
    state: &RobotState,
    x_d: Vec2,
    params: &FusionParams,
) -> Result<GuidanceOutput> {
    if !(params.alpha >= 1.0) {
        return Err(Error::InvalidParam { name: "alpha", reason: format!("{} < 1", params.alpha) });
    }
    let Some(v_h) = v_h else {
        return Ok(GuidanceOutput::none());
    };
    let int_field = int_spec
        .map(|spec| field::radial_length(&spec, v_h).map(|d_h| ActiveField { label: FieldLabel::intent(spec.mode), spec, d_h }))
        .transpose()?;
    let sing_field = sing_spec
        .map(|spec| {
            field::radial_length(&spec, v_h).map(|d_h| ActiveField { label: FieldLabel::singularity(spec.mode), spec, d_h })
        })
        .transpose()?;

    let (mode, d_h, active_fields) = match (int_field, sing_field) {
        (None, None) => return Ok(GuidanceOutput::none()),
        (Some(f), None) | (None, Some(f)) => (f.spec.mode, f.d_h, vec![f]),
        (Some(i), Some(s)) if i.spec.mode == s.spec.mode => {
            (i.spec.mode, fuse_homogeneous(i.d_h, s.d_h, params.alpha), vec![i, s])
        }
        (Some(i), Some(s)) => {
            let stiff = if i.spec.mode == FieldMode::Active { i } else { s };
            (FieldMode::Active, stiff.d_h, vec![stiff])
        }
    };
    let f_c = mode_force(mode, d_h, state, x_d, &params.gains);
    ensure_finite2(&f_c, "guidance force")?;
    Ok(GuidanceOutput {
        f_c: cap_norm(f_c, params.force_clamp),
        mode: Some(mode),
        d_h,
        active_fields,
    })
}
