use nalgebra::{DMatrix, Isometry3, Vector3};

use super::model::{JointKind, KinematicModel};
use super::pose::Pose;
use crate::error::Result;

/// World transforms of every link plus world axes/origins of every movable
/// joint for one configuration.
#[derive(Debug, Clone)]
pub struct LinkPoses {
    links: Vec<Isometry3<f64>>,
    axes: Vec<Vector3<f64>>,
    origins: Vec<Vector3<f64>>,
    full_q: Vec<f64>,
}

impl LinkPoses {
    pub fn link(&self, link: usize) -> &Isometry3<f64> {
        &self.links[link]
    }

    pub fn link_pose(&self, link: usize) -> Pose {
        Pose::from_isometry(&self.links[link])
    }

    pub fn full_q(&self) -> &[f64] {
        &self.full_q
    }

    pub fn position(&self, link: usize) -> Vector3<f64> {
        self.links[link].translation.vector
    }

    /// Linear and angular velocity columns of a point on `link` w.r.t.
    /// movable joint `j` (which must be an ancestor of the link).
    #[inline]
    fn columns(&self, model: &KinematicModel, j: usize, point: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
        let a = self.axes[j];
        match model.joints()[j].kind {
            JointKind::Revolute => (a.cross(&(point - self.origins[j])), a),
            JointKind::Prismatic => (a, Vector3::zeros()),
            JointKind::Fixed => unreachable!("fixed joints are never ancestors"),
        }
    }

    /// Adds `w · ∂point/∂q_j` into `grad_full[j]` for every movable ancestor
    /// of `link`; `point` is a world-frame point rigidly attached to `link`.
    pub fn accumulate_point_gradient(
        &self,
        model: &KinematicModel,
        link: usize,
        point: &Vector3<f64>,
        w: &Vector3<f64>,
        grad_full: &mut [f64],
    ) {
        for &j in model.ancestors(link) {
            let a = self.axes[j];
            grad_full[j] += match model.joints()[j].kind {
                JointKind::Revolute => a.dot(&(point - self.origins[j]).cross(w)),
                JointKind::Prismatic => a.dot(w),
                JointKind::Fixed => 0.0,
            };
        }
    }

    /// Adds `w · ∂ω/∂q_j` (angular part) for every movable ancestor of `link`.
    pub fn accumulate_angular_gradient(
        &self,
        model: &KinematicModel,
        link: usize,
        w: &Vector3<f64>,
        grad_full: &mut [f64],
    ) {
        for &j in model.ancestors(link) {
            if model.joints()[j].kind == JointKind::Revolute {
                grad_full[j] += self.axes[j].dot(w);
            }
        }
    }

    /// 6×n spatial Jacobian `[linear; angular]` of `link`'s origin over all
    /// movable joints.
    pub fn full_jacobian(&self, model: &KinematicModel, link: usize) -> DMatrix<f64> {
        let mut jac = DMatrix::zeros(6, model.total_count());
        let p = self.position(link);
        for &j in model.ancestors(link) {
            let (lin, ang) = self.columns(model, j, &p);
            jac.fixed_view_mut::<3, 1>(0, j).copy_from(&lin);
            jac.fixed_view_mut::<3, 1>(3, j).copy_from(&ang);
        }
        jac
    }

    /// 6×k spatial Jacobian with passive columns folded into their source.
    pub fn active_jacobian(&self, model: &KinematicModel, link: usize) -> DMatrix<f64> {
        let k = model.active_count();
        let mut jac = DMatrix::zeros(6, k);
        let p = self.position(link);
        for &j in model.ancestors(link) {
            let (lin, ang) = self.columns(model, j, &p);
            let (col, scale) = match &model.joints()[j].passive {
                None => (j, 1.0),
                Some(map) => (map.source, map.derivative(self.full_q[map.source])),
            };
            for r in 0..3 {
                jac[(r, col)] += scale * lin[r];
                jac[(r + 3, col)] += scale * ang[r];
            }
        }
        jac
    }
}

/// Rows of the spatial Jacobian used for the singularity measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskSpace {
    /// All six twist rows.
    #[default]
    Full,
    /// The three linear rows only (planar or position-only tasks).
    Position,
}

/// Spatial Jacobian plus the singularity measures derived from it.
#[derive(Debug, Clone)]
pub struct JacobianResult {
    /// 6×k, rows `[linear; angular]`, columns are active joints.
    pub jacobian: DMatrix<f64>,
    /// Smallest singular value of the task rows.
    pub smallest_singular_value: f64,
    /// Product of the task-row singular values; equals `sqrt(det(J Jᵀ))`
    /// whenever the task has no more rows than active joints.
    pub manipulability: f64,
}

impl JacobianResult {
    pub fn from_jacobian(jacobian: DMatrix<f64>, task: TaskSpace) -> Self {
        let (s0, m) = singular_measures(&jacobian, task);
        Self {
            jacobian,
            smallest_singular_value: s0,
            manipulability: m,
        }
    }
}

/// `(s_0, manipulability)` of the task rows of a 6×k Jacobian.
pub fn singular_measures(jacobian: &DMatrix<f64>, task: TaskSpace) -> (f64, f64) {
    let rows = match task {
        TaskSpace::Full => 6,
        TaskSpace::Position => 3,
    };
    let block = jacobian.rows(0, rows).into_owned();
    if block.ncols() == 0 {
        return (0.0, 0.0);
    }
    let sv = block.singular_values();
    let s0 = sv.iter().copied().fold(f64::INFINITY, f64::min).max(0.0);
    let m = sv.iter().product::<f64>().max(0.0);
    (s0, m)
}

impl KinematicModel {
    /// World poses for an active configuration. Only the dimension is
    /// checked; limits are the caller's concern.
    pub fn link_poses(&self, active_q: &[f64]) -> Result<LinkPoses> {
        self.check_active(active_q)?;
        Ok(self.link_poses_unchecked(active_q))
    }

    pub(crate) fn link_poses_unchecked(&self, active_q: &[f64]) -> LinkPoses {
        let mut full_q = vec![0.0; self.total_count()];
        self.fill_full_config(active_q, &mut full_q);
        self.link_poses_full(full_q)
    }

    /// World poses for an explicit `n`-vector of movable joint positions.
    pub fn link_poses_full(&self, full_q: Vec<f64>) -> LinkPoses {
        let n = self.total_count();
        let mut links = vec![Isometry3::identity(); self.links().len()];
        let mut axes = vec![Vector3::zeros(); n];
        let mut origins = vec![Vector3::zeros(); n];
        for &ji in self.topo_order() {
            let joint = &self.joints()[ji];
            let frame = links[joint.parent_link] * joint.origin;
            if joint.is_movable() {
                axes[ji] = frame.rotation * joint.axis;
                origins[ji] = frame.translation.vector;
                links[joint.child_link] = frame * joint.motion(full_q[ji]);
            } else {
                links[joint.child_link] = frame;
            }
        }
        LinkPoses {
            links,
            axes,
            origins,
            full_q,
        }
    }

    /// Pose of a named link frame in the root frame.
    pub fn forward_kinematics(&self, active_q: &[f64], frame: &str) -> Result<Pose> {
        let link = self.link_index(frame)?;
        Ok(self.link_poses(active_q)?.link_pose(link))
    }

    /// Spatial Jacobian of a link frame, singularity measures over all six rows.
    pub fn spatial_jacobian(&self, active_q: &[f64], frame: &str) -> Result<JacobianResult> {
        self.spatial_jacobian_in(active_q, frame, TaskSpace::Full)
    }

    pub fn spatial_jacobian_in(
        &self,
        active_q: &[f64],
        frame: &str,
        task: TaskSpace,
    ) -> Result<JacobianResult> {
        let link = self.link_index(frame)?;
        let poses = self.link_poses(active_q)?;
        Ok(JacobianResult::from_jacobian(poses.active_jacobian(self, link), task))
    }
}
