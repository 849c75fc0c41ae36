//! Anisotropic guidance field.
//!
//! A field assigns every planar direction `u` a radial length
//! `d(u) = d1 ∓ d2 · uᵀv_r`. In passive mode (minus sign) the length is a
//! damping magnitude and is shortest along the preferred direction `v_r`;
//! in active mode (plus sign) it is a stiffness magnitude and is longest
//! along `v_r`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Vec2;

/// Relative margin keeping `d2` strictly below `d1`.
pub const D2_MARGIN: f64 = 0.02;

const UNIT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldMode {
    Passive,
    Active,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub mode: FieldMode,
    pub d1: f64,
    pub d2: f64,
    pub v_r: Vec2,
}

impl FieldSpec {
    /// Builds a spec, clamping `d2` into `[0, (1 − D2_MARGIN)·d1]` and
    /// normalising `v_r`.
    pub fn new(mode: FieldMode, d1: f64, d2: f64, v_r: Vec2) -> Result<Self> {
        if !(d1.is_finite() && d1 >= 0.0) {
            return Err(Error::InvalidParam { name: "d1", reason: format!("{d1} is not a non-negative number") });
        }
        if !d2.is_finite() {
            return Err(Error::NonFinite("d2"));
        }
        let n = v_r.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::NotUnit(n));
        }
        Ok(Self { mode, d1, d2: clamp_d2(d2, d1), v_r: v_r / n })
    }

    pub fn d_min(&self) -> f64 {
        self.d1 - self.d2
    }

    pub fn d_max(&self) -> f64 {
        self.d1 + self.d2
    }
}

pub fn clamp_d2(d2: f64, d1: f64) -> f64 {
    d2.clamp(0.0, (1.0 - D2_MARGIN) * d1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuidanceGains {
    /// Stiffness per unit radial length (N/m).
    pub k_p: f64,
    /// Damping per unit radial length (N·s/m).
    pub k_d: f64,
}

impl Default for GuidanceGains {
    fn default() -> Self {
        Self { k_p: 80.0, k_d: 10.0 }
    }
}

pub fn radial_length(spec: &FieldSpec, u: Vec2) -> Result<f64> {
    let n = u.norm();
    if !((n - 1.0).abs() <= UNIT_TOL) {
        return Err(Error::NotUnit(n));
    }
    let align = u.dot(&spec.v_r);
    Ok(match spec.mode {
        FieldMode::Passive => spec.d1 - spec.d2 * align,
        FieldMode::Active => spec.d1 + spec.d2 * align,
    })
}

/// Damping force `−K_d · d_h · v`; never injects energy.
pub fn passive_force(d_h: f64, v: Vec2, gains: &GuidanceGains) -> Vec2 {
    -v * (gains.k_d * d_h)
}

/// Stiffness force `K_p · d_h · (x_d − x)`.
pub fn active_force(d_h: f64, x_d: Vec2, x: Vec2, gains: &GuidanceGains) -> Vec2 {
    (x_d - x) * (gains.k_p * d_h)
}

/// Polar samples of the field boundary, `φ_i = −π + 2πi/n`.
pub fn field_boundary(spec: &FieldSpec, n: usize) -> Vec<Vec2> {
    let n = n.max(8);
    (0..n)
        .map(|i| {
            let phi = -std::f64::consts::PI + std::f64::consts::TAU * i as f64 / n as f64;
            let u = Vec2::new(phi.cos(), phi.sin());
            let align = u.dot(&spec.v_r);
            let d = match spec.mode {
                FieldMode::Passive => spec.d1 - spec.d2 * align,
                FieldMode::Active => spec.d1 + spec.d2 * align,
            };
            u * d
        })
        .collect()
}
