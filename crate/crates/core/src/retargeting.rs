//! Fingertip-vector retargeting from human keypoints to robot hand joints.
//!
//! The objective is `Σ‖α·v_i − FK_i(q)‖² + β‖q − q_prev‖²` over the active
//! joints only. Passive (loop) joints are evaluated through their coupling
//! maps in the forward pass, and their partial derivatives are folded into
//! the driving joint in the backward pass, so the solver works in `k`
//! dimensions instead of `n`. [`retarget_constrained`] keeps the `n`-variable
//! formulation with explicit equality constraints as a reference.

use std::sync::Arc;
use std::time::Instant;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::KinematicModel;
use crate::optim::{
    minimize_augmented_lagrangian, minimize_bounded, AugmentedLagrangianOptions, Constraints,
    Objective, SolverOptions,
};
use crate::session::HandFrame;

pub const DEFAULT_SMOOTHNESS: f64 = 0.03;
pub const DEFAULT_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_MAX_ITERATIONS: usize = 50;

/// Names one compared vector: robot `origin_frame → tip_frame` against the
/// human keypoint `keypoint_label` (relative to `origin_label`, or to the
/// wrist when absent).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorSpec {
    pub origin_frame: String,
    pub tip_frame: String,
    pub keypoint_label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin_label: Option<String>,
}

#[derive(Debug, Clone)]
struct ResolvedVector {
    origin_link: usize,
    tip_link: usize,
    spec: VectorSpec,
}

#[derive(Debug, Clone)]
pub struct RetargetProblem {
    model: Arc<KinematicModel>,
    vectors: Vec<ResolvedVector>,
    scaling: f64,
    smoothness_weight: f64,
    pub max_iterations: usize,
    pub convergence_tol: f64,
}

impl RetargetProblem {
    pub fn new(model: Arc<KinematicModel>, vectors: Vec<VectorSpec>) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::InvalidArgument("at least one keypoint vector is required".into()));
        }
        let vectors = vectors
            .into_iter()
            .map(|spec| {
                Ok(ResolvedVector {
                    origin_link: model.link_index(&spec.origin_frame)?,
                    tip_link: model.link_index(&spec.tip_frame)?,
                    spec,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            model,
            vectors,
            scaling: 1.0,
            smoothness_weight: DEFAULT_SMOOTHNESS,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            convergence_tol: DEFAULT_TOLERANCE,
        })
    }

    /// Wrist-to-fingertip vectors: one per tip link, the root link as the
    /// origin, and the tip link's name as the keypoint label.
    pub fn fingertips(model: Arc<KinematicModel>, tips: &[&str]) -> Result<Self> {
        let root = model.links()[model.root()].name.clone();
        let specs = tips
            .iter()
            .map(|t| VectorSpec {
                origin_frame: root.clone(),
                tip_frame: t.to_string(),
                keypoint_label: t.to_string(),
                origin_label: None,
            })
            .collect();
        Self::new(model, specs)
    }

    pub fn with_scaling(mut self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!("scaling must be positive, got {alpha}")));
        }
        self.scaling = alpha;
        Ok(self)
    }

    pub fn with_smoothness(mut self, beta: f64) -> Result<Self> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "smoothness weight must be nonnegative, got {beta}"
            )));
        }
        self.smoothness_weight = beta;
        Ok(self)
    }

    pub fn model(&self) -> &KinematicModel {
        &self.model
    }

    pub fn model_arc(&self) -> &Arc<KinematicModel> {
        &self.model
    }

    pub fn scaling(&self) -> f64 {
        self.scaling
    }

    pub fn smoothness_weight(&self) -> f64 {
        self.smoothness_weight
    }

    pub fn vector_count(&self) -> usize {
        self.vectors.len()
    }

    pub fn vector_specs(&self) -> impl Iterator<Item = &VectorSpec> {
        self.vectors.iter().map(|v| &v.spec)
    }

    /// Robot-side vectors `FK_tip − FK_origin` at an active configuration.
    pub fn robot_vectors(&self, active_q: &[f64]) -> Result<Vec<Vector3<f64>>> {
        let poses = self.model.link_poses(active_q)?;
        Ok(self
            .vectors
            .iter()
            .map(|v| poses.position(v.tip_link) - poses.position(v.origin_link))
            .collect())
    }

    /// Human-side vectors from a frame, in wrist coordinates. `Ok(None)`
    /// when any referenced keypoint is non-finite.
    pub fn human_vectors(&self, frame: &HandFrame) -> Result<Option<Vec<Vector3<f64>>>> {
        let mut out = Vec::with_capacity(self.vectors.len());
        for v in &self.vectors {
            let tip = frame
                .keypoint(&v.spec.keypoint_label)
                .ok_or_else(|| Error::MissingKeypoint(v.spec.keypoint_label.clone()))?;
            let origin = match &v.spec.origin_label {
                None => Vector3::zeros(),
                Some(l) => frame
                    .keypoint(l)
                    .ok_or_else(|| Error::MissingKeypoint(l.clone()))?,
            };
            let d = tip - origin;
            if d.iter().any(|c| !c.is_finite()) {
                return Ok(None);
            }
            out.push(d);
        }
        Ok(Some(out))
    }

    /// Matching term and its gradient over all `n` movable joints.
    fn matching_term(&self, full_q: Vec<f64>, human: &[Vector3<f64>], grad_full: &mut [f64]) -> f64 {
        let poses = self.model.link_poses_full(full_q);
        grad_full.iter_mut().for_each(|g| *g = 0.0);
        let mut value = 0.0;
        for (v, h) in self.vectors.iter().zip(human) {
            let tip = poses.position(v.tip_link);
            let origin = poses.position(v.origin_link);
            let r = self.scaling * h - (tip - origin);
            value += r.norm_squared();
            poses.accumulate_point_gradient(&self.model, v.tip_link, &tip, &(-2.0 * r), grad_full);
            poses.accumulate_point_gradient(&self.model, v.origin_link, &origin, &(2.0 * r), grad_full);
        }
        value
    }
}

/// `α = robot_hand_length / human_hand_length`.
pub fn scale_estimate(human_hand_length: f64, robot_hand_length: f64) -> Result<f64> {
    if !(human_hand_length > 0.0 && robot_hand_length > 0.0)
        || !human_hand_length.is_finite()
        || !robot_hand_length.is_finite()
    {
        return Err(Error::InvalidArgument(format!(
            "hand lengths must be positive, got {human_hand_length} and {robot_hand_length}"
        )));
    }
    Ok(robot_hand_length / human_hand_length)
}

/// Reduced (`k`-dimensional) objective value and gradient.
pub fn hand_objective(
    problem: &RetargetProblem,
    active_q: &[f64],
    prev_q: &[f64],
    human_vectors: &[Vector3<f64>],
) -> Result<(f64, Vec<f64>)> {
    let model = problem.model();
    model.check_active(active_q)?;
    model.check_active(prev_q)?;
    if human_vectors.len() != problem.vector_count() {
        return Err(Error::DimensionMismatch {
            expected: problem.vector_count(),
            got: human_vectors.len(),
        });
    }
    let mut eval = ReducedObjective::new(problem, prev_q, human_vectors);
    let mut grad = vec![0.0; model.active_count()];
    let value = eval.evaluate(active_q, &mut grad);
    Ok((value, grad))
}

/// Expanded (`n`-variable) objective: the same matching term evaluated at an
/// explicit full configuration, smoothness on the active entries only.
/// The gradient is the unfolded `n`-vector.
pub fn expanded_objective(
    problem: &RetargetProblem,
    full_q: &[f64],
    prev_q: &[f64],
    human_vectors: &[Vector3<f64>],
) -> Result<(f64, Vec<f64>)> {
    let model = problem.model();
    if full_q.len() != model.total_count() {
        return Err(Error::DimensionMismatch {
            expected: model.total_count(),
            got: full_q.len(),
        });
    }
    model.check_active(prev_q)?;
    let mut eval = ExpandedObjective {
        problem,
        prev_q,
        human: human_vectors,
    };
    let mut grad = vec![0.0; model.total_count()];
    let value = eval.evaluate(full_q, &mut grad);
    Ok((value, grad))
}

struct ReducedObjective<'a> {
    problem: &'a RetargetProblem,
    prev_q: &'a [f64],
    human: &'a [Vector3<f64>],
    full_q: Vec<f64>,
    grad_full: Vec<f64>,
}

impl<'a> ReducedObjective<'a> {
    fn new(problem: &'a RetargetProblem, prev_q: &'a [f64], human: &'a [Vector3<f64>]) -> Self {
        let n = problem.model().total_count();
        Self {
            problem,
            prev_q,
            human,
            full_q: vec![0.0; n],
            grad_full: vec![0.0; n],
        }
    }
}

impl Objective for ReducedObjective<'_> {
    fn evaluate(&mut self, q: &[f64], grad: &mut [f64]) -> f64 {
        let model = self.problem.model();
        model.fill_full_config(q, &mut self.full_q);
        let mut value = self
            .problem
            .matching_term(self.full_q.clone(), self.human, &mut self.grad_full);
        model.fold_gradient(q, &self.grad_full, grad);
        let beta = self.problem.smoothness_weight;
        for i in 0..q.len() {
            let d = q[i] - self.prev_q[i];
            value += beta * d * d;
            grad[i] += 2.0 * beta * d;
        }
        value
    }
}

struct ExpandedObjective<'a> {
    problem: &'a RetargetProblem,
    prev_q: &'a [f64],
    human: &'a [Vector3<f64>],
}

impl Objective for ExpandedObjective<'_> {
    fn evaluate(&mut self, q: &[f64], grad: &mut [f64]) -> f64 {
        let mut value = self.problem.matching_term(q.to_vec(), self.human, grad);
        let beta = self.problem.smoothness_weight;
        for i in 0..self.prev_q.len() {
            let d = q[i] - self.prev_q[i];
            value += beta * d * d;
            grad[i] += 2.0 * beta * d;
        }
        value
    }
}

/// `q_j − c_j(q_source) = 0` for every passive joint.
struct LoopConstraints<'a> {
    model: &'a KinematicModel,
}

impl Constraints for LoopConstraints<'_> {
    fn count(&self) -> usize {
        self.model.total_count() - self.model.active_count()
    }

    fn evaluate(&mut self, x: &[f64], values: &mut [f64], jacobian: &mut [f64]) {
        let n = self.model.total_count();
        let k = self.model.active_count();
        jacobian.iter_mut().for_each(|v| *v = 0.0);
        for (r, j) in (k..n).enumerate() {
            let map = self.model.joints()[j].passive.as_ref().expect("passive");
            values[r] = x[j] - map.eval(x[map.source]);
            jacobian[r * n + j] = 1.0;
            jacobian[r * n + map.source] = -map.derivative(x[map.source]);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetargetResult {
    pub active_q: Vec<f64>,
    pub objective_value: f64,
    pub iterations_used: usize,
    pub converged: bool,
    /// Frame had non-finite keypoints; `active_q` is the warm start.
    pub skipped: bool,
    pub solve_time: f64,
}

fn solver_options(problem: &RetargetProblem) -> SolverOptions {
    SolverOptions {
        max_iterations: problem.max_iterations,
        tolerance: problem.convergence_tol,
    }
}

fn skipped(prev_q: &[f64], start: Instant) -> RetargetResult {
    RetargetResult {
        active_q: prev_q.to_vec(),
        objective_value: 0.0,
        iterations_used: 0,
        converged: false,
        skipped: true,
        solve_time: start.elapsed().as_secs_f64(),
    }
}

/// Solves the reduced problem for one frame, warm-started at `prev_q`
/// (which is also the smoothness baseline).
pub fn retarget(problem: &RetargetProblem, frame: &HandFrame, prev_q: &[f64]) -> Result<RetargetResult> {
    let start = Instant::now();
    let Some(human) = problem.human_vectors(frame)? else {
        return Ok(skipped(prev_q, start));
    };
    retarget_vectors(problem, &human, prev_q, start)
}

/// [`retarget`] on precomputed human vectors.
pub fn retarget_vectors(
    problem: &RetargetProblem,
    human: &[Vector3<f64>],
    prev_q: &[f64],
    start: Instant,
) -> Result<RetargetResult> {
    let model = problem.model();
    model.check_active(prev_q)?;
    let mut objective = ReducedObjective::new(problem, prev_q, human);
    let sol = minimize_bounded(
        &mut objective,
        prev_q,
        model.active_lower(),
        model.active_upper(),
        &solver_options(problem),
    )?;
    Ok(RetargetResult {
        converged: sol.converged(),
        active_q: sol.x,
        objective_value: sol.value,
        iterations_used: sol.iterations,
        skipped: false,
        solve_time: start.elapsed().as_secs_f64(),
    })
}

/// Reference solver: all `n` joints are variables and each loop coupling is
/// an equality constraint, enforced by an augmented Lagrangian.
pub fn retarget_constrained(
    problem: &RetargetProblem,
    frame: &HandFrame,
    prev_q: &[f64],
) -> Result<RetargetResult> {
    let start = Instant::now();
    let Some(human) = problem.human_vectors(frame)? else {
        return Ok(skipped(prev_q, start));
    };
    retarget_constrained_vectors(problem, &human, prev_q, start)
}

pub fn retarget_constrained_vectors(
    problem: &RetargetProblem,
    human: &[Vector3<f64>],
    prev_q: &[f64],
    start: Instant,
) -> Result<RetargetResult> {
    let model = problem.model();
    let x0 = model.full_config(prev_q)?;
    let mut objective = ExpandedObjective {
        problem,
        prev_q,
        human,
    };
    let mut constraints = LoopConstraints { model };
    let options = AugmentedLagrangianOptions {
        inner: solver_options(problem),
        feasibility_tol: 1e-9,
        max_outer: 30,
        initial_penalty: 10.0,
    };
    let sol = minimize_augmented_lagrangian(
        &mut objective,
        &mut constraints,
        &x0,
        model.lower_limits(),
        model.upper_limits(),
        &options,
    )?;
    let active_q = sol.x[..model.active_count()].to_vec();
    // report the reduced objective at the feasible projection of the answer
    let (value, _) = hand_objective(problem, &active_q, prev_q, human)?;
    Ok(RetargetResult {
        converged: sol.converged(),
        active_q,
        objective_value: value,
        iterations_used: sol.iterations,
        skipped: false,
        solve_time: start.elapsed().as_secs_f64(),
    })
}

/// Stateful per-hand solver carrying the warm start between frames.
///
/// The first solved frame has no previous command to stay close to, so it
/// is solved without the smoothness term; `initial_q` is only its warm start.
#[derive(Debug, Clone)]
pub struct Retargeter {
    problem: RetargetProblem,
    prev_q: Vec<f64>,
    started: bool,
}

impl Retargeter {
    pub fn new(problem: RetargetProblem, initial_q: Vec<f64>) -> Result<Self> {
        problem.model().check_within_limits(&initial_q)?;
        Ok(Self {
            problem,
            prev_q: initial_q,
            started: false,
        })
    }

    pub fn problem(&self) -> &RetargetProblem {
        &self.problem
    }

    pub fn current(&self) -> &[f64] {
        &self.prev_q
    }

    pub fn step(&mut self, frame: &HandFrame) -> Result<RetargetResult> {
        let result = if self.started {
            retarget(&self.problem, frame, &self.prev_q)?
        } else {
            let first = self.problem.clone().with_smoothness(0.0)?;
            retarget(&first, frame, &self.prev_q)?
        };
        self.started |= !result.skipped;
        self.prev_q.clone_from(&result.active_q);
        Ok(result)
    }
}
