//! Per-module timing harnesses behind `teleop profile` and the benchmarks.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::arm_control::{solve_arm, ArmControlProblem};
use crate::error::{Error, Result};
use crate::haptics::{HapticsConfig, HapticsPipeline, PwmScale};
use crate::kinematics::KinematicModel;
use crate::retargeting::{retarget_constrained_vectors, retarget_vectors, RetargetProblem};
use crate::session::{ProfileReport, ProfileRow};
use crate::synth::tactile::{self, TactileSpec};

/// Cost terms enabled on top of inverse kinematics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MotionVariant {
    IkOnly,
    Collision,
    Singularity,
    CollisionSingularity,
}

impl MotionVariant {
    pub const ALL: [MotionVariant; 4] = [
        MotionVariant::IkOnly,
        MotionVariant::Collision,
        MotionVariant::Singularity,
        MotionVariant::CollisionSingularity,
    ];

    pub fn terms(self) -> (bool, bool) {
        match self {
            MotionVariant::IkOnly => (false, false),
            MotionVariant::Collision => (true, false),
            MotionVariant::Singularity => (false, true),
            MotionVariant::CollisionSingularity => (true, true),
        }
    }

    pub fn row_name(self) -> &'static str {
        match self {
            MotionVariant::IkOnly => "motion_control/ik",
            MotionVariant::Collision => "motion_control/ik+coll",
            MotionVariant::Singularity => "motion_control/ik+sing",
            MotionVariant::CollisionSingularity => "motion_control/ik+coll+sing",
        }
    }
}

impl fmt::Display for MotionVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MotionVariant::IkOnly => "ik",
            MotionVariant::Collision => "coll",
            MotionVariant::Singularity => "sing",
            MotionVariant::CollisionSingularity => "coll+sing",
        })
    }
}

impl FromStr for MotionVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "ik" => MotionVariant::IkOnly,
            "coll" => MotionVariant::Collision,
            "sing" => MotionVariant::Singularity,
            "coll+sing" | "coll_sing" => MotionVariant::CollisionSingularity,
            _ => return Err(Error::InvalidArgument(format!("unknown variant `{s}` (ik, coll, sing, coll+sing)"))),
        })
    }
}

fn random_q(model: &KinematicModel, rng: &mut impl Rng, shrink: f64) -> Vec<f64> {
    model
        .active_lower()
        .iter()
        .zip(model.active_upper())
        .map(|(&lo, &hi)| {
            let mid = 0.5 * (lo + hi);
            let half = 0.5 * (hi - lo) * shrink;
            rng.random_range(mid - half..=mid + half)
        })
        .collect()
}

/// Seeded joint-space path: piecewise-linear moves between random
/// waypoints, `steps_per_segment` frames each.
pub fn joint_path(model: &KinematicModel, start: &[f64], frames: usize, seed: u64, shrink: f64) -> Vec<Vec<f64>> {
    const STEPS_PER_SEGMENT: usize = 40;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut from = start.to_vec();
    let mut to = random_q(model, &mut rng, shrink);
    let mut out = Vec::with_capacity(frames);
    for i in 0..frames {
        let s = (i % STEPS_PER_SEGMENT + 1) as f64 / STEPS_PER_SEGMENT as f64;
        out.push(from.iter().zip(&to).map(|(a, b)| a + (b - a) * s).collect());
        if (i + 1) % STEPS_PER_SEGMENT == 0 {
            from = to;
            to = random_q(model, &mut rng, shrink);
        }
    }
    out
}

/// Tracks end-effector targets generated by FK along a seeded joint path,
/// once per variant, each run warm-started from its own previous solution.
pub fn profile_motion_control(
    problem: &ArmControlProblem,
    initial_q: &[f64],
    frames: usize,
    seed: u64,
    variants: &[MotionVariant],
) -> Result<ProfileReport> {
    let path = joint_path(problem.model(), initial_q, frames, seed, 0.7);
    let targets = path
        .iter()
        .map(|q| problem.ee_pose(q))
        .collect::<Result<Vec<_>>>()?;
    let mut report = ProfileReport::default();
    for &v in variants {
        let (coll, sing) = v.terms();
        let p = problem.with_terms(coll, sing);
        let mut q = initial_q.to_vec();
        let mut times = Vec::with_capacity(frames);
        for t in &targets {
            let cmd = solve_arm(&p, t, &q)?;
            times.push(cmd.solve_time);
            q = cmd.active_q;
        }
        report.push(ProfileRow::from_seconds(v.row_name(), &times));
    }
    Ok(report)
}

/// Which retargeting formulation(s) to time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopJoints {
    Reduced,
    Constrained,
    Both,
}

pub const RETARGET_REDUCED_ROW: &str = "retargeting/reduced";
pub const RETARGET_CONSTRAINED_ROW: &str = "retargeting/constrained";
pub const SPEEDUP_NOTE: &str = "speedup_constrained_over_reduced";
pub const OBJECTIVE_GAP_NOTE: &str = "max_objective_gap";

/// Solves `frames` synthetic fingertip frames (FK of random configurations)
/// from perturbed warm starts with each formulation. Both see identical
/// inputs and tolerances.
pub fn profile_retargeting(problem: &RetargetProblem, frames: usize, seed: u64, which: LoopJoints) -> Result<ProfileReport> {
    let model = problem.model();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut reduced, mut constrained) = (Vec::new(), Vec::new());
    let mut gap: f64 = 0.0;
    for _ in 0..frames {
        let truth = random_q(model, &mut rng, 1.0);
        let human = problem.robot_vectors(&truth)?;
        let mut prev: Vec<f64> = truth.iter().map(|v| v + rng.random_range(-0.3..0.3)).collect();
        model.clamp_active(&mut prev);
        let a = (which != LoopJoints::Constrained)
            .then(|| retarget_vectors(problem, &human, &prev, Instant::now()))
            .transpose()?;
        let b = (which != LoopJoints::Reduced)
            .then(|| retarget_constrained_vectors(problem, &human, &prev, Instant::now()))
            .transpose()?;
        if let Some(a) = &a {
            reduced.push(a.solve_time);
        }
        if let Some(b) = &b {
            constrained.push(b.solve_time);
        }
        if let (Some(a), Some(b)) = (a, b) {
            gap = gap.max((a.objective_value - b.objective_value).abs());
        }
    }
    let mut report = ProfileReport::default();
    if !reduced.is_empty() {
        report.push(ProfileRow::from_seconds(RETARGET_REDUCED_ROW, &reduced));
    }
    if !constrained.is_empty() {
        report.push(ProfileRow::from_seconds(RETARGET_CONSTRAINED_ROW, &constrained));
    }
    if let (Some(r), Some(c)) = (report.row(RETARGET_REDUCED_ROW), report.row(RETARGET_CONSTRAINED_ROW)) {
        let ratio = c.mean_ms / r.mean_ms;
        report.notes.push((SPEEDUP_NOTE.into(), ratio));
        report.notes.push((OBJECTIVE_GAP_NOTE.into(), gap));
    }
    Ok(report)
}

pub const HAPTICS_ROW: &str = "haptics_pwm";

/// Runs the calibrate → filter → encode pipeline over a synthetic pulse
/// fixture with `sensors` channels.
pub fn profile_haptics(sensors: usize, frames: usize, seed: u64) -> Result<ProfileReport> {
    let spec = TactileSpec {
        sensors,
        ..TactileSpec::new(seed, frames)
    };
    let table = tactile::calibration_table(&spec);
    let scale = PwmScale::uniform(sensors, tactile::FIXTURE_THRESHOLD, tactile::FIXTURE_FULL_SCALE)?;
    let mut pipeline = HapticsPipeline::new(table, scale, HapticsConfig::default())?;
    let mut bytes = Vec::with_capacity(sensors);
    let mut times = Vec::with_capacity(frames);
    for f in tactile::pulse_stream(&spec) {
        let start = Instant::now();
        bytes.clear();
        pipeline.process_into(&f, &mut bytes)?;
        times.push(start.elapsed().as_secs_f64());
    }
    let mut report = ProfileReport::default();
    report.push(ProfileRow::from_seconds(HAPTICS_ROW, &times));
    Ok(report)
}

/// Convenience for callers holding a bare model.
pub fn arm_problem(model: KinematicModel, ee_frame: &str) -> Result<ArmControlProblem> {
    ArmControlProblem::new(Arc::new(model), ee_frame, Default::default())
}
