//! Planar serial-arm kinematics.
//!
//! The arm is an `n`-link chain of revolute joints in the plane. Joint
//! angles are relative (each measured from the previous link) and are kept
//! unwrapped so that manipulability differences between ticks stay smooth.

use nalgebra::{Matrix2, Matrix2xX};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Vec2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmGeometry {
    link_lengths: Vec<f64>,
    base: Vec2,
}

impl ArmGeometry {
    pub fn new(link_lengths: Vec<f64>, base: Vec2) -> Result<Self> {
        if link_lengths.len() < 2 {
            return Err(Error::Geometry(format!(
                "need at least 2 links, got {}",
                link_lengths.len()
            )));
        }
        if let Some(l) = link_lengths.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::Geometry(format!("link length {l} is not positive")));
        }
        if !(base.x.is_finite() && base.y.is_finite()) {
            return Err(Error::Geometry("base is not finite".into()));
        }
        Ok(Self { link_lengths, base })
    }

    /// Two 0.4 m links with the base at the origin.
    pub fn default_2r() -> Self {
        Self::new(vec![0.4, 0.4], Vec2::zeros()).expect("valid default arm")
    }

    pub fn n_links(&self) -> usize {
        self.link_lengths.len()
    }

    pub fn link_lengths(&self) -> &[f64] {
        &self.link_lengths
    }

    pub fn base(&self) -> Vec2 {
        self.base
    }

    /// Maximum distance of the end-effector from the base.
    pub fn reach(&self) -> f64 {
        self.link_lengths.iter().sum()
    }
}

impl Default for ArmGeometry {
    fn default() -> Self {
        Self::default_2r()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JointConfig(pub Vec<f64>);

impl JointConfig {
    pub fn new(q: Vec<f64>) -> Result<Self> {
        if q.iter().all(|v| v.is_finite()) {
            Ok(Self(q))
        } else {
            Err(Error::NonFinite("joint configuration"))
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Base followed by every joint position and finally the end-effector.
pub fn joint_positions(geom: &ArmGeometry, q: &JointConfig) -> Vec<Vec2> {
    debug_assert_eq!(geom.n_links(), q.len());
    let mut points = Vec::with_capacity(geom.n_links() + 1);
    let mut p = geom.base;
    let mut angle = 0.0;
    points.push(p);
    for (l, qi) in geom.link_lengths.iter().zip(q.as_slice()) {
        angle += qi;
        p += Vec2::new(angle.cos(), angle.sin()) * *l;
        points.push(p);
    }
    points
}

pub fn forward_kinematics(geom: &ArmGeometry, q: &JointConfig) -> Vec2 {
    debug_assert_eq!(geom.n_links(), q.len());
    let mut p = geom.base;
    let mut angle = 0.0;
    for (l, qi) in geom.link_lengths.iter().zip(q.as_slice()) {
        angle += qi;
        p += Vec2::new(angle.cos(), angle.sin()) * *l;
    }
    p
}

/// Analytic 2×n position Jacobian.
///
/// Column `i` sums the contribution of every link at or beyond joint `i`,
/// since rotating joint `i` swings the whole distal chain.
pub fn jacobian(geom: &ArmGeometry, q: &JointConfig) -> Matrix2xX<f64> {
    let n = geom.n_links();
    debug_assert_eq!(n, q.len());
    let mut cumulative = Vec::with_capacity(n);
    let mut angle = 0.0;
    for qi in q.as_slice() {
        angle += qi;
        cumulative.push(angle);
    }
    let mut jac = Matrix2xX::zeros(n);
    // Walk from the tip so each column is a running suffix sum.
    let mut sx = 0.0;
    let mut sy = 0.0;
    for i in (0..n).rev() {
        let l = geom.link_lengths[i];
        sx -= l * cumulative[i].sin();
        sy += l * cumulative[i].cos();
        jac[(0, i)] = sx;
        jac[(1, i)] = sy;
    }
    jac
}

fn gram(jac: &Matrix2xX<f64>) -> Matrix2<f64> {
    jac * jac.transpose()
}

/// Yoshikawa manipulability `sqrt(det(J Jᵀ))`.
///
/// The determinant is expanded as a sum of squared 2×2 minors
/// (Cauchy–Binet), which stays accurate near singular configurations where
/// forming `J Jᵀ` first cancels catastrophically.
pub fn manipulability(geom: &ArmGeometry, q: &JointConfig) -> f64 {
    let jac = jacobian(geom, q);
    let n = jac.ncols();
    let mut det = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let minor = jac[(0, i)] * jac[(1, j)] - jac[(0, j)] * jac[(1, i)];
            det += minor * minor;
        }
    }
    det.sqrt()
}

/// One damped-least-squares step: `q + Jᵀ (J Jᵀ + λ² I)⁻¹ dx`.
///
/// With `damping > 0` the inverted matrix is positive definite, so the step
/// exists and stays bounded at singular configurations.
pub fn ik_step(geom: &ArmGeometry, q: &JointConfig, dx: Vec2, damping: f64) -> JointConfig {
    if dx.x == 0.0 && dx.y == 0.0 {
        return q.clone();
    }
    let jac = jacobian(geom, q);
    let reg = gram(&jac) + Matrix2::identity() * (damping * damping);
    let Some(inv) = reg.try_inverse() else {
        return q.clone();
    };
    let dq = jac.transpose() * (inv * dx);
    JointConfig(q.0.iter().zip(dq.iter()).map(|(a, b)| a + b).collect())
}

/// Iterates [`ik_step`] from `seed` until the end-effector sits at `target`.
///
/// Used to pick a joint configuration consistent with an initial Cartesian
/// position; `max_step` bounds each iteration's displacement.
pub fn solve_position(
    geom: &ArmGeometry,
    seed: &JointConfig,
    target: Vec2,
    damping: f64,
    max_step: f64,
    tol: f64,
    max_iters: usize,
) -> JointConfig {
    let mut q = seed.clone();
    for _ in 0..max_iters {
        let err = target - forward_kinematics(geom, &q);
        if err.norm() <= tol {
            break;
        }
        q = ik_step(geom, &q, cap_norm(err, max_step), damping);
    }
    q
}

pub(crate) fn cap_norm(v: Vec2, cap: f64) -> Vec2 {
    let n = v.norm();
    if n > cap && n > 0.0 {
        v * (cap / n)
    } else {
        v
    }
}
