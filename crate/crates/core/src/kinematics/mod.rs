//! Robot model, forward kinematics and spatial Jacobians.

pub mod description;
mod fk;
mod model;
mod pose;

pub use description::RobotDescription;
pub use fk::{singular_measures, JacobianResult, LinkPoses, TaskSpace};
pub use model::{load_model, Joint, JointKind, KinematicModel, Link, LinkSphere, PassiveMap};
pub use pose::{Pose, PoseDoc};
