//! Cartesian impedance dynamics of the end-effector.
//!
//! The commanded acceleration is `M⁻¹(K(x_d − x) + D(v_d − v) + f_c)`,
//! integrated with semi-implicit Euler. The joint configuration is carried
//! along as a shadow of the Cartesian state through damped least squares.

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite2, Error, Result};
use crate::kinematics::{self, cap_norm, ArmGeometry, JointConfig};
use crate::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpedanceParams {
    pub mass: Matrix2<f64>,
    pub stiffness: Matrix2<f64>,
    pub damping: Matrix2<f64>,
}

impl ImpedanceParams {
    pub fn diagonal(mass: f64, stiffness: f64, damping: f64) -> Self {
        Self {
            mass: Matrix2::identity() * mass,
            stiffness: Matrix2::identity() * stiffness,
            damping: Matrix2::identity() * damping,
        }
    }

    /// Checks symmetry, positive-definite inertia and semidefinite K and D.
    pub fn validate(&self) -> Result<()> {
        check_sym_psd(&self.mass, "mass", true)?;
        check_sym_psd(&self.stiffness, "stiffness", false)?;
        check_sym_psd(&self.damping, "damping", false)
    }
}

impl Default for ImpedanceParams {
    fn default() -> Self {
        Self::diagonal(2.0, 150.0, 25.0)
    }
}

fn check_sym_psd(m: &Matrix2<f64>, name: &'static str, strict: bool) -> Result<()> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(name));
    }
    if (m[(0, 1)] - m[(1, 0)]).abs() > 1e-12 * (1.0 + m.amax()) {
        return Err(Error::InvalidParam {
            name,
            reason: "matrix is not symmetric".into(),
        });
    }
    let eig = m.symmetric_eigenvalues();
    let min = eig.min();
    let ok = if strict { min > 0.0 } else { min >= 0.0 };
    if !ok {
        return Err(Error::InvalidParam {
            name,
            reason: format!("smallest eigenvalue {min} out of range"),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub x: Vec2,
    pub v: Vec2,
    pub q: JointConfig,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesiredCommand {
    pub x_d: Vec2,
    pub v_d: Vec2,
}

impl DesiredCommand {
    /// Desired pose with zero desired velocity.
    pub fn at(x_d: Vec2) -> Self {
        Self { x_d, v_d: Vec2::zeros() }
    }
}

pub fn impedance_accel(
    state: &RobotState,
    des: &DesiredCommand,
    f_c: Vec2,
    p: &ImpedanceParams,
) -> Result<Vec2> {
    ensure_finite2(&f_c, "guidance force")?;
    let inv_mass = p
        .mass
        .try_inverse()
        .ok_or(Error::InvalidParam { name: "mass", reason: "singular".into() })?;
    let force = p.stiffness * (des.x_d - state.x) + p.damping * (des.v_d - state.v) + f_c;
    Ok(inv_mass * force)
}

/// Scales `v` down to `v_max` keeping its direction.
pub fn clamp_speed(v: Vec2, v_max: f64) -> Vec2 {
    cap_norm(v, v_max)
}

/// Discrete impedance plant: gains, limits and the arm whose joints shadow
/// the Cartesian state.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpedanceModel {
    pub params: ImpedanceParams,
    pub geometry: ArmGeometry,
    pub v_max: f64,
    pub ik_damping: f64,
    /// Largest Cartesian correction handed to a single DLS step.
    pub ik_max_step: f64,
}

impl ImpedanceModel {
    pub fn new(params: ImpedanceParams, geometry: ArmGeometry) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            geometry,
            v_max: 0.5,
            ik_damping: 0.05,
            ik_max_step: 0.05,
        })
    }

    /// Advances one control step of length `dt`.
    ///
    /// The shadow joint step targets the new Cartesian position from the
    /// current forward kinematics, so linearisation error does not
    /// accumulate across ticks.
    pub fn step(&self, state: &RobotState, des: &DesiredCommand, f_c: Vec2, dt: f64) -> Result<RobotState> {
        if !(dt > 0.0 && dt <= 0.02) {
            return Err(Error::InvalidParam {
                name: "dt",
                reason: format!("{dt} outside (0, 0.02]"),
            });
        }
        ensure_finite2(&state.x, "state position")?;
        ensure_finite2(&state.v, "state velocity")?;
        ensure_finite2(&des.x_d, "desired position")?;
        ensure_finite2(&des.v_d, "desired velocity")?;
        let a = impedance_accel(state, des, f_c, &self.params)?;
        let v = clamp_speed(state.v + a * dt, self.v_max);
        let x = state.x + v * dt;
        let current = kinematics::forward_kinematics(&self.geometry, &state.q);
        let q = kinematics::ik_step(
            &self.geometry,
            &state.q,
            cap_norm(x - current, self.ik_max_step),
            self.ik_damping,
        );
        if !q.0.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("joint configuration"));
        }
        Ok(RobotState { x, v, q, t: state.t + dt })
    }
}

/// `½ vᵀ M v + ½ eᵀ K e` with `e = x_d − x`.
pub fn spring_energy(state: &RobotState, x_d: Vec2, p: &ImpedanceParams) -> f64 {
    let e = x_d - state.x;
    0.5 * state.v.dot(&(p.mass * state.v)) + 0.5 * e.dot(&(p.stiffness * e))
}
