//! Arm motion control: per-frame minimization of
//! `L_arm = L_ik + L_sin + L_col` over the arm's active joints.
//!
//! * `L_ik = β_pos‖p_ee − p_target‖ + β_rot·arccos(2⟨q_ee, q_target⟩² − 1)`
//! * `L_sin = 1 − manipulability/λ` while the smallest singular value is
//!   below `s_low`, zero otherwise
//! * `L_col` is the sphere-model cost from [`crate::collision`]
//!
//! With collision enabled and a collision-free warm start, the line search
//! additionally rejects trial configurations in which any checked sphere
//! pair overlaps, so every returned configuration stays collision-free.

use std::sync::Arc;
use std::time::Instant;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::collision::{build_sphere_model, SphereModel, DEFAULT_EPSILON};
use crate::error::{Error, Result};
use crate::kinematics::{singular_measures, KinematicModel, LinkPoses, Pose, TaskSpace};
use crate::optim::{minimize_bounded, Objective, SolverOptions};

/// Clamp applied to the arccos argument.
pub const ARCCOS_CLAMP: f64 = 1e-7;
/// Central-difference step for the manipulability gradient.
pub const SINGULARITY_FD_STEP: f64 = 1e-6;

/// Tunable weights and budgets of the arm objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArmParams {
    pub position_weight: f64,
    pub rotation_weight: f64,
    pub singularity_trigger: f64,
    pub singularity_temperature: f64,
    pub collision_epsilon: f64,
    pub enable_collision: bool,
    pub enable_singularity: bool,
    pub task_space: TaskSpace,
    pub max_iterations: usize,
    pub convergence_tol: f64,
}

impl Default for ArmParams {
    fn default() -> Self {
        Self {
            position_weight: 1.0,
            rotation_weight: 0.1,
            singularity_trigger: 0.05,
            singularity_temperature: 1.0,
            collision_epsilon: DEFAULT_EPSILON,
            enable_collision: true,
            enable_singularity: true,
            task_space: TaskSpace::Full,
            max_iterations: 30,
            convergence_tol: 1e-6,
        }
    }
}

impl ArmParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Err(Error::InvalidArgument(format!("{what} = {v} is out of range")));
        if !(self.position_weight > 0.0) {
            return bad("position_weight", self.position_weight);
        }
        if !(self.rotation_weight > 0.0) {
            return bad("rotation_weight", self.rotation_weight);
        }
        if !(self.singularity_temperature > 0.0) {
            return bad("singularity_temperature", self.singularity_temperature);
        }
        if !(self.singularity_trigger >= 0.0) {
            return bad("singularity_trigger", self.singularity_trigger);
        }
        if !(self.collision_epsilon > 0.0) {
            return bad("collision_epsilon", self.collision_epsilon);
        }
        if !(self.convergence_tol > 0.0) {
            return bad("convergence_tol", self.convergence_tol);
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ArmControlProblem {
    model: Arc<KinematicModel>,
    spheres: Arc<SphereModel>,
    ee_link: usize,
    pub params: ArmParams,
}

impl ArmControlProblem {
    pub fn new(model: Arc<KinematicModel>, ee_frame: &str, params: ArmParams) -> Result<Self> {
        params.validate()?;
        let ee_link = model.link_index(ee_frame)?;
        let spheres = Arc::new(build_sphere_model(&model));
        Ok(Self {
            model,
            spheres,
            ee_link,
            params,
        })
    }

    pub fn model(&self) -> &KinematicModel {
        &self.model
    }

    pub fn sphere_model(&self) -> &SphereModel {
        &self.spheres
    }

    pub fn ee_link(&self) -> usize {
        self.ee_link
    }

    pub fn ee_pose(&self, active_q: &[f64]) -> Result<Pose> {
        Ok(self.model.link_poses(active_q)?.link_pose(self.ee_link))
    }

    /// A copy with different toggles, sharing model and spheres.
    pub fn with_terms(&self, collision: bool, singularity: bool) -> Self {
        let mut p = self.clone();
        p.params.enable_collision = collision;
        p.params.enable_singularity = singularity;
        p
    }

    fn ik_term(&self, poses: &LinkPoses, target: &Pose, grad_full: &mut [f64]) -> f64 {
        let ee = poses.link(self.ee_link);
        let p = ee.translation.vector;
        let e = p - target.position;
        let dist = e.norm();
        let mut value = self.params.position_weight * dist;
        if dist > 0.0 {
            poses.accumulate_point_gradient(
                &self.model,
                self.ee_link,
                &p,
                &(self.params.position_weight / dist * e),
                grad_full,
            );
        }

        let q = ee.rotation.quaternion();
        let t = target.orientation.quaternion();
        let d = q.coords.dot(&t.coords);
        let raw = 2.0 * d * d - 1.0;
        let arg = raw.clamp(-1.0 + ARCCOS_CLAMP, 1.0 - ARCCOS_CLAMP);
        value += self.params.rotation_weight * arg.acos();
        if arg == raw {
            // ∂d/∂q_i = ω_i · a for q̇ = ½ (0, ω) ⊗ q
            let (qw, qv) = (q.w, q.vector().into_owned());
            let (tw, tv) = (t.w, t.vector().into_owned());
            let a: Vector3<f64> = 0.5 * (-qv * tw + tv * qw + qv.cross(&tv));
            let dtheta = -1.0 / (1.0 - arg * arg).sqrt() * 4.0 * d;
            poses.accumulate_angular_gradient(
                &self.model,
                self.ee_link,
                &(self.params.rotation_weight * dtheta * a),
                grad_full,
            );
        }
        value
    }

    fn singular_values_at(&self, poses: &LinkPoses) -> (f64, f64) {
        singular_measures(&poses.active_jacobian(&self.model, self.ee_link), self.params.task_space)
    }

    fn manipulability_branch(&self, active_q: &[f64]) -> f64 {
        let poses = self.model.link_poses_unchecked(active_q);
        1.0 - self.singular_values_at(&poses).1 / self.params.singularity_temperature
    }

    fn singularity_term(&self, active_q: &[f64], poses: &LinkPoses, grad: &mut [f64]) -> f64 {
        let (s0, m) = self.singular_values_at(poses);
        if s0 >= self.params.singularity_trigger {
            return 0.0;
        }
        let mut probe = active_q.to_vec();
        for i in 0..active_q.len() {
            probe[i] = active_q[i] + SINGULARITY_FD_STEP;
            let up = self.manipulability_branch(&probe);
            probe[i] = active_q[i] - SINGULARITY_FD_STEP;
            let down = self.manipulability_branch(&probe);
            probe[i] = active_q[i];
            grad[i] += (up - down) / (2.0 * SINGULARITY_FD_STEP);
        }
        1.0 - m / self.params.singularity_temperature
    }
}

/// Sum of the enabled terms with its gradient.
struct ArmObjective<'a> {
    problem: &'a ArmControlProblem,
    target: &'a Pose,
    guard_collisions: bool,
    full: Vec<f64>,
    folded: Vec<f64>,
}

impl<'a> ArmObjective<'a> {
    fn new(problem: &'a ArmControlProblem, target: &'a Pose, guard_collisions: bool) -> Self {
        Self {
            problem,
            target,
            guard_collisions,
            full: vec![0.0; problem.model.total_count()],
            folded: vec![0.0; problem.model.active_count()],
        }
    }
}

impl Objective for ArmObjective<'_> {
    fn evaluate(&mut self, q: &[f64], grad: &mut [f64]) -> f64 {
        let p = self.problem;
        let model = &p.model;
        let poses = model.link_poses_unchecked(q);
        self.full.iter_mut().for_each(|v| *v = 0.0);
        let mut value = p.ik_term(&poses, self.target, &mut self.full);
        model.fold_gradient(q, &self.full, grad);
        if p.params.enable_collision {
            value += p
                .spheres
                .cost_at(model, &poses, p.params.collision_epsilon, Some(&mut self.full));
            model.fold_gradient(q, &self.full, &mut self.folded);
            grad.iter_mut().zip(&self.folded).for_each(|(g, c)| *g += c);
        }
        if p.params.enable_singularity {
            value += p.singularity_term(q, &poses, grad);
        }
        value
    }

    fn feasible(&mut self, q: &[f64]) -> bool {
        if !self.guard_collisions {
            return true;
        }
        let poses = self.problem.model.link_poses_unchecked(q);
        !self.problem.spheres.any_penetration(&poses)
    }
}

fn eval_checked(problem: &ArmControlProblem, active_q: &[f64], target: Option<&Pose>) -> Result<()> {
    problem.model.check_active(active_q)?;
    if let Some(t) = target {
        check_target(t)?;
    }
    Ok(())
}

fn check_target(target: &Pose) -> Result<()> {
    let q = target.orientation.quaternion();
    if target.position.iter().any(|v| !v.is_finite()) || q.coords.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("target pose is not finite".into()));
    }
    Ok(())
}

fn fold(problem: &ArmControlProblem, q: &[f64], full: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; problem.model.active_count()];
    problem.model.fold_gradient(q, full, &mut out);
    out
}

/// `L_ik` and its analytic gradient.
pub fn ik_cost(problem: &ArmControlProblem, active_q: &[f64], target: &Pose) -> Result<(f64, Vec<f64>)> {
    eval_checked(problem, active_q, Some(target))?;
    let poses = problem.model.link_poses_unchecked(active_q);
    let mut full = vec![0.0; problem.model.total_count()];
    let value = problem.ik_term(&poses, target, &mut full);
    Ok((value, fold(problem, active_q, &full)))
}

/// `L_sin`; the active branch's gradient is a central finite difference.
pub fn singularity_cost(problem: &ArmControlProblem, active_q: &[f64]) -> Result<(f64, Vec<f64>)> {
    eval_checked(problem, active_q, None)?;
    let poses = problem.model.link_poses_unchecked(active_q);
    let mut grad = vec![0.0; problem.model.active_count()];
    let value = problem.singularity_term(active_q, &poses, &mut grad);
    Ok((value, grad))
}

/// `L_col` with the problem's ε.
pub fn arm_collision_cost(problem: &ArmControlProblem, active_q: &[f64]) -> Result<(f64, Vec<f64>)> {
    crate::collision::collision_cost_with(
        &problem.spheres,
        &problem.model,
        active_q,
        problem.params.collision_epsilon,
    )
}

/// The enabled sum `L_arm` and its gradient, exactly as the solver sees it.
pub fn arm_objective(problem: &ArmControlProblem, active_q: &[f64], target: &Pose) -> Result<(f64, Vec<f64>)> {
    eval_checked(problem, active_q, Some(target))?;
    let mut obj = ArmObjective::new(problem, target, false);
    let mut grad = vec![0.0; problem.model.active_count()];
    let value = obj.evaluate(active_q, &mut grad);
    Ok((value, grad))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmCommand {
    pub active_q: Vec<f64>,
    pub ik_error_pos: f64,
    pub ik_error_rot: f64,
    pub min_singular_value: f64,
    pub objective_value: f64,
    pub iterations: usize,
    pub solve_time: f64,
    pub converged: bool,
}

/// One control step: minimizes the enabled `L_arm` terms, warm-started at
/// `prev_q`, within the joint limits.
pub fn solve_arm(problem: &ArmControlProblem, target: &Pose, prev_q: &[f64]) -> Result<ArmCommand> {
    let start = Instant::now();
    check_target(target)?;
    problem.model.check_within_limits(prev_q)?;
    let guard = problem.params.enable_collision && {
        let poses = problem.model.link_poses_unchecked(prev_q);
        !problem.spheres.any_penetration(&poses)
    };
    let mut objective = ArmObjective::new(problem, target, guard);
    let options = SolverOptions {
        max_iterations: problem.params.max_iterations,
        tolerance: problem.params.convergence_tol,
    };
    let sol = minimize_bounded(
        &mut objective,
        prev_q,
        problem.model.active_lower(),
        problem.model.active_upper(),
        &options,
    )?;
    let poses = problem.model.link_poses_unchecked(&sol.x);
    let ee = poses.link_pose(problem.ee_link);
    let (s0, _) = problem.singular_values_at(&poses);
    Ok(ArmCommand {
        converged: sol.converged(),
        ik_error_pos: ee.position_distance(target),
        ik_error_rot: ee.rotation_distance(target),
        min_singular_value: s0,
        objective_value: sol.value,
        iterations: sol.iterations,
        active_q: sol.x,
        solve_time: start.elapsed().as_secs_f64(),
    })
}

/// Stateful per-arm controller: every step is warm-started at the previous
/// successful command.
#[derive(Debug, Clone)]
pub struct ArmController {
    problem: ArmControlProblem,
    q: Vec<f64>,
}

impl ArmController {
    pub fn new(problem: ArmControlProblem, initial_q: Vec<f64>) -> Result<Self> {
        problem.model.check_within_limits(&initial_q)?;
        Ok(Self { problem, q: initial_q })
    }

    pub fn problem(&self) -> &ArmControlProblem {
        &self.problem
    }

    pub fn current(&self) -> &[f64] {
        &self.q
    }

    pub fn step(&mut self, target: &Pose) -> Result<ArmCommand> {
        let cmd = solve_arm(&self.problem, target, &self.q)?;
        self.q.clone_from(&cmd.active_q);
        Ok(cmd)
    }
}

/// Sequential control over a timestamped target stream. Errors are reported
/// per frame and do not end the stream.
pub fn track_trajectory<'a, I>(
    problem: &'a ArmControlProblem,
    targets: I,
    initial_q: Vec<f64>,
) -> impl Iterator<Item = (f64, Result<ArmCommand>)> + 'a
where
    I: IntoIterator<Item = (f64, Pose)>,
    I::IntoIter: 'a,
{
    let mut q = initial_q;
    targets.into_iter().map(move |(t, target)| {
        let cmd = solve_arm(problem, &target, &q);
        if let Ok(c) = &cmd {
            q.clone_from(&c.active_q);
        }
        (t, cmd)
    })
}
