//! Binding human wrist frames to robot end-effector frames at engage time.
//!
//! Every mode maps orientations relatively per hand,
//! `R_0 · H_0⁻¹ · H_t`, and positions as the robot's initial position plus a
//! transformed human displacement `H_t − H_0`. The modes differ in how that
//! displacement is rotated:
//!
//! * `AlignSeparately`: by each hand's own frame alignment `R_0 · H_0⁻¹`,
//!   i.e. `target = R_0 ∘ H_0⁻¹ ∘ H_t` for each arm independently.
//! * `AlignCenter`: not at all. Both hands share the midpoint offset
//!   `mid(R_L0, R_R0) − mid(H_L0, H_R0)`; the remaining per-hand spacing
//!   difference is frozen at engage, so changes in the inter-hand
//!   displacement carry over unchanged.
//! * `AlignLeft` / `AlignRight`: by the named hand's frame alignment, for
//!   both hands, so the operator steers both arms in that hand's frame.
//!
//! All modes reproduce the robot's current end-effector poses at engage.

use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::HandSide;
use crate::error::{Error, Result};
use crate::kinematics::Pose;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AlignmentMode {
    #[default]
    AlignSeparately,
    AlignCenter,
    AlignLeft,
    AlignRight,
}

/// Human wrist pose and robot end-effector pose of one side at engage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngagePair {
    pub human: Pose,
    pub robot: Pose,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct SideMap {
    human0: Pose,
    robot0: Pose,
    orientation_map: UnitQuaternion<f64>,
    displacement_map: UnitQuaternion<f64>,
}

impl SideMap {
    fn apply(&self, wrist: &Pose) -> Pose {
        let moved = wrist.position - self.human0.position;
        Pose::new(
            self.robot0.position + self.displacement_map * moved,
            self.orientation_map * wrist.orientation,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameAlignment {
    mode: AlignmentMode,
    left: Option<SideMap>,
    right: Option<SideMap>,
}

fn frame_map(pair: &EngagePair) -> UnitQuaternion<f64> {
    pair.robot.orientation * pair.human.orientation.inverse()
}

impl FrameAlignment {
    pub fn engage(mode: AlignmentMode, left: Option<EngagePair>, right: Option<EngagePair>) -> Result<Self> {
        let need = |pair: Option<EngagePair>, side: &'static str| pair.ok_or(Error::MissingHand(side));
        let shared = match mode {
            AlignmentMode::AlignSeparately => {
                if left.is_none() && right.is_none() {
                    return Err(Error::MissingHand("left or right"));
                }
                None
            }
            AlignmentMode::AlignCenter => {
                need(left, "left")?;
                need(right, "right")?;
                Some(UnitQuaternion::identity())
            }
            AlignmentMode::AlignLeft => Some(frame_map(&need(left, "left")?)),
            AlignmentMode::AlignRight => Some(frame_map(&need(right, "right")?)),
        };
        let side = |pair: Option<EngagePair>| {
            pair.map(|p| SideMap {
                human0: p.human,
                robot0: p.robot,
                orientation_map: frame_map(&p),
                displacement_map: shared.unwrap_or_else(|| frame_map(&p)),
            })
        };
        Ok(Self {
            mode,
            left: side(left),
            right: side(right),
        })
    }

    pub fn mode(&self) -> AlignmentMode {
        self.mode
    }

    pub fn is_engaged(&self, side: HandSide) -> bool {
        self.side(side).is_some()
    }

    fn side(&self, side: HandSide) -> Option<&SideMap> {
        match side {
            HandSide::Left => self.left.as_ref(),
            HandSide::Right => self.right.as_ref(),
        }
    }

    /// Robot end-effector target for a live human wrist pose.
    pub fn map(&self, side: HandSide, wrist: &Pose) -> Result<Pose> {
        let map = self.side(side).ok_or(match side {
            HandSide::Left => Error::MissingHand("left"),
            HandSide::Right => Error::MissingHand("right"),
        })?;
        Ok(map.apply(wrist))
    }

    /// Shared midpoint offset `mid(R_0) − mid(H_0)` when both hands are
    /// engaged.
    pub fn midpoint_offset(&self) -> Option<Vector3<f64>> {
        let (l, r) = (self.left.as_ref()?, self.right.as_ref()?);
        Some(0.5 * (l.robot0.position + r.robot0.position) - 0.5 * (l.human0.position + r.human0.position))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn pair(hx: f64, rx: f64) -> EngagePair {
        EngagePair {
            human: Pose::from_translation(hx, 0.0, 0.0),
            robot: Pose::from_translation(rx, 0.0, 0.5),
        }
    }

    #[test]
    fn center_example() {
        let a = FrameAlignment::engage(AlignmentMode::AlignCenter, Some(pair(-0.2, -0.3)), Some(pair(0.2, 0.3)))
            .unwrap();
        assert_eq!(a.midpoint_offset().unwrap(), Vector3::new(0.0, 0.0, 0.5));
        let t = a.map(HandSide::Right, &Pose::from_translation(0.3, 0.0, 0.0)).unwrap();
        assert!((t.position - Vector3::new(0.4, 0.0, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn separately_maps_pure_rotation() {
        let human = Pose::new(
            Vector3::new(0.1, 0.2, 0.3),
            UnitQuaternion::from_euler_angles(0.3, -0.2, 0.9),
        );
        let robot = Pose::new(Vector3::new(0.5, 0.0, 0.4), UnitQuaternion::from_euler_angles(0.0, 1.0, 0.0));
        let a = FrameAlignment::engage(AlignmentMode::AlignSeparately, None, Some(EngagePair { human, robot }))
            .unwrap();
        let r = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), FRAC_PI_2);
        let moved = Pose::new(human.position, human.orientation * r);
        let t = a.map(HandSide::Right, &moved).unwrap();
        assert!(t.approx_eq(&Pose::new(robot.position, robot.orientation * r), 1e-14));
        assert!(matches!(a.map(HandSide::Left, &moved), Err(Error::MissingHand("left"))));
    }

    #[test]
    fn modes_require_their_hands() {
        let p = Some(pair(0.0, 0.0));
        assert!(FrameAlignment::engage(AlignmentMode::AlignCenter, p, None).is_err());
        assert!(FrameAlignment::engage(AlignmentMode::AlignRight, p, None).is_err());
        assert!(FrameAlignment::engage(AlignmentMode::AlignLeft, p, None).is_ok());
        assert!(FrameAlignment::engage(AlignmentMode::AlignSeparately, None, None).is_err());
    }

    #[test]
    fn mode_names() {
        let m: AlignmentMode = serde_json::from_str("\"ALIGN_CENTER\"").unwrap();
        assert_eq!(m, AlignmentMode::AlignCenter);
    }
}
