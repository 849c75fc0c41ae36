//! Planar shared-autonomy teleoperation simulator.
//!
//! The crate couples a Cartesian impedance plant with direction-dependent
//! guidance fields whose shape follows the robot's goal belief and the
//! arm's distance from singular configurations.
//!
//! Module map:
//! - [`kinematics`]: planar arm FK, Jacobian, manipulability, DLS steps
//! - [`impedance`]: impedance law and its time integration
//! - [`field`]: the anisotropic field and its passive/active force laws
//! - [`guidance`]: intent- and singularity-aware instances and fusion
//! - [`inference`]: goal policies, Bayesian belief, blending
//! - [`pipeline`]: one control tick, shared by batch and live runs
//! - [`scenario`]: scripted operators, episodes, metrics, suites
//! - [`protocol`]: session wire messages

pub mod config;
pub mod error;
pub mod field;
pub mod guidance;
pub mod impedance;
pub mod inference;
pub mod kinematics;
pub mod pipeline;
pub mod protocol;
pub mod scenario;

pub use config::Config;
pub use error::{Error, Result};

pub type Vec2 = nalgebra::Vector2<f64>;
