//! Real-time teleoperation solvers for bimanual dexterous robots.
//!
//! The crate covers the full per-frame path from tracked human hands to robot
//! commands: fingertip retargeting onto hands with coupled (loop) joints,
//! arm motion control that folds inverse kinematics, singularity avoidance
//! and sphere-based self-collision into one objective, tactile-to-PWM haptic
//! feedback, bimanual alignment and a replay/profiling harness.

pub mod arm_control;
pub mod collision;
pub mod error;
pub mod haptics;
pub mod kinematics;
pub mod optim;
pub mod profiling;
pub mod retargeting;
pub mod session;
pub mod synth;

pub use error::{Error, Result};
pub use kinematics::{JacobianResult, KinematicModel, Pose, TaskSpace};
