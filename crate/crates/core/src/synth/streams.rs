//! Seeded hand-pose recordings and arm target paths.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::robots;
use crate::kinematics::{KinematicModel, Pose};
use crate::retargeting::RetargetProblem;
use crate::session::{BimanualFrame, HandFrame, HandSide, Recording};

/// Default frame rate of generated recordings, Hz.
pub const DEFAULT_RATE_HZ: f64 = 60.0;

/// Nominal human wrist positions at the start of generated recordings.
pub const LEFT_WRIST_START: [f64; 3] = [0.35, 0.2, 1.0];
pub const RIGHT_WRIST_START: [f64; 3] = [0.35, -0.2, 1.0];

fn smoothstep(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * (3.0 - 2.0 * s)
}

fn lerp(a: &[f64], b: &[f64], s: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + (y - x) * s).collect()
}

/// Fingertip keypoints of the built-in coupled hand, used as stand-ins for
/// human fingertips (wrist frame, scaling 1).
pub struct KeypointSource {
    problem: RetargetProblem,
    labels: Arc<[String]>,
}

impl Default for KeypointSource {
    fn default() -> Self {
        Self::new()
    }
}

impl KeypointSource {
    pub fn new() -> Self {
        let model = Arc::new(robots::hand(true).build());
        let problem = RetargetProblem::fingertips(model, &robots::FINGERTIPS).expect("built-in hand has its fingertips");
        let labels: Vec<String> = robots::FINGERTIPS.iter().map(|s| s.to_string()).collect();
        Self {
            problem,
            labels: labels.into(),
        }
    }

    pub fn labels(&self) -> &Arc<[String]> {
        &self.labels
    }

    pub fn model(&self) -> &KinematicModel {
        self.problem.model()
    }

    pub fn random_q(&self, rng: &mut impl Rng) -> Vec<f64> {
        let m = self.problem.model();
        m.active_lower()
            .iter()
            .zip(m.active_upper())
            .map(|(&lo, &hi)| rng.random_range(lo..=hi))
            .collect()
    }

    pub fn keypoints(&self, active_q: &[f64]) -> Vec<Vector3<f64>> {
        self.problem.robot_vectors(active_q).expect("configuration within limits")
    }

    fn hand(&self, timestamp: f64, side: HandSide, wrist: Pose, q: &[f64]) -> HandFrame {
        HandFrame {
            timestamp,
            side,
            wrist,
            keypoints: self.keypoints(q),
            keypoint_labels: self.labels.clone(),
        }
    }
}

fn timestamp(i: usize, rate_hz: f64) -> f64 {
    i as f64 / rate_hz
}

fn start_pose(position: [f64; 3]) -> Pose {
    Pose::from_translation(position[0], position[1], position[2])
}

/// Both wrists move along fixed random directions by up to 0.12 m with a
/// smoothstep profile, so wrist displacement from the first frame grows
/// monotonically. The hands close from one random grasp to another.
pub fn reach(seed: u64, frames: usize, rate_hz: f64) -> Recording {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let src = KeypointSource::new();
    let mut plan = |start: [f64; 3]| {
        let dir = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let dir = if dir.norm() < 1e-3 { Vector3::x() } else { dir.normalize() };
        let reach = rng.random_range(0.06..0.12);
        let axis = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 1.0).normalize();
        let turn = rng.random_range(-0.3..0.3);
        let (q0, q1) = (src.random_q(&mut rng), src.random_q(&mut rng));
        (start_pose(start), dir * reach, axis, turn, q0, q1)
    };
    let plans = [
        (HandSide::Left, plan(LEFT_WRIST_START)),
        (HandSide::Right, plan(RIGHT_WRIST_START)),
    ];
    let mut rec = Recording::new(src.labels().to_vec());
    for i in 0..frames {
        let t = timestamp(i, rate_hz);
        let s = smoothstep(if frames > 1 { i as f64 / (frames - 1) as f64 } else { 0.0 });
        let mut frame = BimanualFrame {
            timestamp: t,
            left: None,
            right: None,
        };
        for (side, (start, offset, axis, turn, q0, q1)) in &plans {
            let rot = UnitQuaternion::from_axis_angle(&nalgebra::Unit::new_normalize(*axis), turn * s);
            let wrist = Pose::new(start.position + offset * s, rot * start.orientation);
            let hand = src.hand(t, *side, wrist, &lerp(q0, q1, s));
            match side {
                HandSide::Left => frame.left = Some(hand),
                HandSide::Right => frame.right = Some(hand),
            }
        }
        rec.frames.push(frame);
    }
    rec
}

/// Both hands hold one seeded pose for every frame.
pub fn static_pose(seed: u64, frames: usize, rate_hz: f64) -> Recording {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let src = KeypointSource::new();
    let ql = src.random_q(&mut rng);
    let qr = src.random_q(&mut rng);
    let mut rec = Recording::new(src.labels().to_vec());
    for i in 0..frames {
        let t = timestamp(i, rate_hz);
        rec.frames.push(BimanualFrame {
            timestamp: t,
            left: Some(src.hand(t, HandSide::Left, start_pose(LEFT_WRIST_START), &ql)),
            right: Some(src.hand(t, HandSide::Right, start_pose(RIGHT_WRIST_START), &qr)),
        });
    }
    rec
}

/// Independent smooth random walks of both wrists (position and
/// orientation), for alignment checks over long recordings.
pub fn wander(seed: u64, frames: usize, rate_hz: f64) -> Recording {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let src = KeypointSource::new();
    let q = src.random_q(&mut rng);
    let mut rec = Recording::new(src.labels().to_vec());
    let mut poses = [start_pose(LEFT_WRIST_START), start_pose(RIGHT_WRIST_START)];
    let mut vel = [Vector3::zeros(), Vector3::zeros()];
    for i in 0..frames {
        let t = timestamp(i, rate_hz);
        if i > 0 {
            for (p, v) in poses.iter_mut().zip(vel.iter_mut()) {
                let kick = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                *v = *v * 0.9 + kick * 2e-3;
                let spin = UnitQuaternion::from_scaled_axis(Vector3::new(
                    rng.random_range(-0.02..0.02),
                    rng.random_range(-0.02..0.02),
                    rng.random_range(-0.02..0.02),
                ));
                // renormalize so the walk does not drift off the unit sphere
                let turned = UnitQuaternion::new_normalize((spin * p.orientation).into_inner());
                *p = Pose::new(p.position + *v, turned);
            }
        }
        rec.frames.push(BimanualFrame {
            timestamp: t,
            left: Some(src.hand(t, HandSide::Left, poses[0], &q)),
            right: Some(src.hand(t, HandSide::Right, poses[1], &q)),
        });
    }
    rec
}

/// End-effector targets for [`robots::arm7`] that start at the home pose
/// and rise straight up past the arm's full extension, so the stretched-out
/// singular configuration is approached and then demanded.
pub fn near_singular_reach(frames: usize) -> Vec<Pose> {
    let model = robots::arm7().build();
    let home = model
        .forward_kinematics(&robots::ARM7_HOME, "tool")
        .expect("home configuration is valid");
    let stretched = model
        .forward_kinematics(&[0.0; 7], "tool")
        .expect("zero configuration is valid");
    let goal = Vector3::new(0.0, 0.0, stretched.position.z + 0.05);
    path(&home, goal, home.orientation, frames)
}

fn path(start: &Pose, goal: Vector3<f64>, orientation: UnitQuaternion<f64>, frames: usize) -> Vec<Pose> {
    (0..frames)
        .map(|i| {
            let s = if frames > 1 { i as f64 / (frames - 1) as f64 } else { 1.0 };
            let s = smoothstep(s);
            Pose::new(start.position + (goal - start.position) * s, orientation)
        })
        .collect()
}

/// A collision-free warm start for the left arm of [`robots::dual_arm`]
/// (joints 0..7) with the right arm at its home pose (joints 7..14).
pub fn dual_arm_home() -> Vec<f64> {
    let mut q = robots::ARM7_HOME.to_vec();
    q.extend_from_slice(&robots::ARM7_HOME);
    q
}

/// Targets for `left_tool` of [`robots::dual_arm`] that sweep from the
/// left arm's home pose through the right arm's body and out the far side,
/// circling once around the right arm's upper link.
pub fn adversarial_dual_arm_path(frames: usize) -> Vec<Pose> {
    let model = robots::dual_arm().build();
    let q = dual_arm_home();
    let home = model.forward_kinematics(&q, "left_tool").expect("home is valid");
    let right_elbow = model
        .forward_kinematics(&q, "right_link4")
        .expect("home is valid")
        .position;
    (0..frames)
        .map(|i| {
            let s = if frames > 1 { i as f64 / (frames - 1) as f64 } else { 1.0 };
            let (goal, w) = if s < 0.5 {
                (right_elbow, smoothstep(2.0 * s))
            } else {
                let a = 2.0 * PI * (2.0 * s - 1.0);
                let orbit = right_elbow + Vector3::new(0.08 * a.cos(), 0.08 * a.sin(), 0.05 * a.sin());
                (orbit, 1.0)
            };
            Pose::new(home.position + (goal - home.position) * w, home.orientation)
        })
        .collect()
}
