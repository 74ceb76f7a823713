//! Sphere-decomposition self-collision model.
//!
//! Every link carries a few spheres in its own frame. The cost is the
//! reciprocal of the summed surface distances over all checked pairs, so it
//! is smooth wherever no pair is clamped at [`DISTANCE_FLOOR`]. Pairs on the
//! same link, on a parent/direct-child link pair, or on a user-listed ignore
//! pair are never checked.

use nalgebra::Vector3;

use crate::error::Result;
use crate::kinematics::{KinematicModel, LinkPoses};

/// Lower clamp on surface distance, meters.
pub const DISTANCE_FLOOR: f64 = 1e-4;
/// Default additive stabilizer in the cost denominator.
pub const DEFAULT_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sphere {
    pub link: usize,
    /// Center in the link frame.
    pub center: Vector3<f64>,
    pub radius: f64,
}

#[derive(Debug, Clone)]
pub struct SphereModel {
    spheres: Vec<Sphere>,
    mask: Vec<bool>,
    pairs: Vec<(usize, usize)>,
}

/// Flattens the per-link spheres of `model` and precomputes the pair mask.
pub fn build_sphere_model(model: &KinematicModel) -> SphereModel {
    let spheres: Vec<Sphere> = model
        .links()
        .iter()
        .enumerate()
        .flat_map(|(li, l)| {
            l.spheres.iter().map(move |s| Sphere {
                link: li,
                center: s.center,
                radius: s.radius,
            })
        })
        .collect();
    if spheres.is_empty() {
        log::warn!("robot description has no collision spheres; collision cost is constant");
    }
    let links = model.links().len();
    let mut link_checked = vec![true; links * links];
    for a in 0..links {
        link_checked[a * links + a] = false;
        if let Some(p) = model.parent_link(a) {
            link_checked[a * links + p] = false;
            link_checked[p * links + a] = false;
        }
    }
    for &(a, b) in model.ignore_pairs() {
        link_checked[a * links + b] = false;
        link_checked[b * links + a] = false;
    }
    let m = spheres.len();
    let mut mask = vec![false; m * m];
    let mut pairs = Vec::new();
    for i in 0..m {
        for j in (i + 1)..m {
            if link_checked[spheres[i].link * links + spheres[j].link] {
                mask[i * m + j] = true;
                mask[j * m + i] = true;
                pairs.push((i, j));
            }
        }
    }
    SphereModel { spheres, mask, pairs }
}

/// Surface distance `max(‖c_a − c_b‖ − r_a − r_b, DISTANCE_FLOOR)` between
/// two spheres given their world centers.
pub fn pair_distance(a: &Sphere, b: &Sphere, center_a: &Vector3<f64>, center_b: &Vector3<f64>) -> f64 {
    surface_distance(a, b, center_a, center_b).max(DISTANCE_FLOOR)
}

/// Unclamped surface distance; negative when the spheres overlap.
pub fn surface_distance(a: &Sphere, b: &Sphere, center_a: &Vector3<f64>, center_b: &Vector3<f64>) -> f64 {
    (center_a - center_b).norm() - a.radius - b.radius
}

impl SphereModel {
    pub fn len(&self) -> usize {
        self.spheres.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spheres.is_empty()
    }

    pub fn spheres(&self) -> &[Sphere] {
        &self.spheres
    }

    /// Whether the pair `(i, j)` is checked.
    pub fn pair_mask(&self, i: usize, j: usize) -> bool {
        self.mask[i * self.spheres.len() + j]
    }

    /// Checked pairs with `i < j`.
    pub fn active_pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn world_centers(&self, poses: &LinkPoses) -> Vec<Vector3<f64>> {
        self.spheres
            .iter()
            .map(|s| poses.link(s.link) * nalgebra::Point3::from(s.center))
            .map(|p| p.coords)
            .collect()
    }

    /// Clamped surface distance of sphere pair `(i, j)`.
    pub fn pair_distance(&self, i: usize, j: usize, centers: &[Vector3<f64>]) -> f64 {
        pair_distance(&self.spheres[i], &self.spheres[j], &centers[i], &centers[j])
    }

    /// Checked pairs whose spheres overlap (unclamped distance < 0).
    pub fn penetrating_pairs(&self, model: &KinematicModel, active_q: &[f64]) -> Result<Vec<(usize, usize)>> {
        let poses = model.link_poses(active_q)?;
        Ok(self.penetrating_pairs_at(&poses))
    }

    pub fn penetrating_pairs_at(&self, poses: &LinkPoses) -> Vec<(usize, usize)> {
        let centers = self.world_centers(poses);
        self.pairs
            .iter()
            .copied()
            .filter(|&(i, j)| surface_distance(&self.spheres[i], &self.spheres[j], &centers[i], &centers[j]) < 0.0)
            .collect()
    }

    pub fn any_penetration(&self, poses: &LinkPoses) -> bool {
        let centers = self.world_centers(poses);
        self.pairs
            .iter()
            .any(|&(i, j)| surface_distance(&self.spheres[i], &self.spheres[j], &centers[i], &centers[j]) < 0.0)
    }

    /// Cost `1 / (Σ d_ij + ε)` at `poses`. When `grad_full` is given it
    /// receives the gradient over all `n` movable joints.
    pub fn cost_at(
        &self,
        model: &KinematicModel,
        poses: &LinkPoses,
        epsilon: f64,
        grad_full: Option<&mut [f64]>,
    ) -> f64 {
        let centers = self.world_centers(poses);
        let mut sum = 0.0;
        let mut pull = grad_full.as_ref().map(|_| vec![Vector3::zeros(); self.spheres.len()]);
        for &(i, j) in &self.pairs {
            let diff = centers[i] - centers[j];
            let dist = diff.norm();
            let d = dist - self.spheres[i].radius - self.spheres[j].radius;
            if d > DISTANCE_FLOOR {
                sum += d;
                if let Some(pull) = pull.as_mut() {
                    let u = diff / dist;
                    pull[i] += u;
                    pull[j] -= u;
                }
            } else {
                sum += DISTANCE_FLOOR;
            }
        }
        let value = 1.0 / (sum + epsilon);
        if let (Some(grad), Some(pull)) = (grad_full, pull) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let scale = -value * value;
            for (s, (c, w)) in self.spheres.iter().zip(centers.iter().zip(&pull)) {
                if w.norm_squared() > 0.0 {
                    poses.accumulate_point_gradient(model, s.link, c, &(scale * w), grad);
                }
            }
        }
        value
    }
}

/// Collision cost and its gradient over the active joints, ε = [`DEFAULT_EPSILON`].
pub fn collision_cost(
    spheres: &SphereModel,
    model: &KinematicModel,
    active_q: &[f64],
) -> Result<(f64, Vec<f64>)> {
    collision_cost_with(spheres, model, active_q, DEFAULT_EPSILON)
}

pub fn collision_cost_with(
    spheres: &SphereModel,
    model: &KinematicModel,
    active_q: &[f64],
    epsilon: f64,
) -> Result<(f64, Vec<f64>)> {
    let poses = model.link_poses(active_q)?;
    let mut full = vec![0.0; model.total_count()];
    let value = spheres.cost_at(model, &poses, epsilon, Some(&mut full));
    let mut grad = vec![0.0; model.active_count()];
    model.fold_gradient(active_q, &full, &mut grad);
    Ok((value, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::robots::{self, DescriptionBuilder};

    fn sphere(radius: f64) -> Sphere {
        Sphere {
            link: 0,
            center: Vector3::zeros(),
            radius,
        }
    }

    #[test]
    fn distance_between_separated_spheres() {
        let d = pair_distance(&sphere(0.1), &sphere(0.1), &Vector3::zeros(), &Vector3::new(0.5, 0.0, 0.0));
        assert!((d - 0.3).abs() < 1e-15);
    }

    #[test]
    fn penetrating_distance_is_floored() {
        let d = pair_distance(&sphere(0.2), &sphere(0.2), &Vector3::zeros(), &Vector3::new(0.3, 0.0, 0.0));
        assert_eq!(d, DISTANCE_FLOOR);
    }

    #[test]
    fn adjacent_links_are_masked() {
        let sm = build_sphere_model(&robots::planar_two_link().build());
        assert_eq!(sm.len(), 4);
        assert!(sm.active_pairs().is_empty());
        for i in 0..4 {
            for j in 0..4 {
                assert!(!sm.pair_mask(i, j));
            }
        }
    }

    fn three_link_chain() -> DescriptionBuilder {
        DescriptionBuilder::new()
            .link("l0", &[([0.0, 0.0, 0.1], 0.05)])
            .link("l1", &[([0.0, 0.0, 0.1], 0.05)])
            .link("l2", &[([0.0, 0.0, 0.1], 0.05)])
            .revolute("a", "l0", "l1", [0.0, 0.0, 0.3], [0.0, 1.0, 0.0], [-2.0, 2.0])
            .revolute("b", "l1", "l2", [0.0, 0.0, 0.3], [0.0, 1.0, 0.0], [-2.0, 2.0])
    }

    #[test]
    fn three_link_chain_has_one_pair() {
        let sm = build_sphere_model(&three_link_chain().build());
        assert_eq!(sm.active_pairs(), &[(0, 2)]);
        assert!(sm.pair_mask(2, 0) && !sm.pair_mask(0, 0));
    }

    #[test]
    fn ignore_list_masks_everything() {
        let sm = build_sphere_model(&three_link_chain().ignore("l2", "l0").build());
        assert!(sm.active_pairs().is_empty());
        let model = three_link_chain().ignore("l0", "l2").build();
        let (v, g) = collision_cost(&build_sphere_model(&model), &model, &[0.1, 0.2]).unwrap();
        assert!((v - 1.0 / DEFAULT_EPSILON).abs() < 1e-6);
        assert!(g.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn single_pair_cost() {
        let model = three_link_chain().build();
        let sm = build_sphere_model(&model);
        let q = [0.0, 0.0];
        // centers at z = 0.1 and 0.7, radii 0.05 each
        let d = 0.6 - 0.1;
        let (v, _) = collision_cost(&sm, &model, &q).unwrap();
        assert!((v - 1.0 / (d + 1e-6)).abs() < 1e-12);
    }

    #[test]
    fn empty_model_is_constant() {
        let model = robots::hand(true).build();
        let sm = build_sphere_model(&model);
        assert!(sm.is_empty());
        let (v, _) = collision_cost(&sm, &model, &[0.0, 0.0, 0.5, 0.5, 0.5, 0.5]).unwrap();
        assert!((v - 1.0 / DEFAULT_EPSILON).abs() < 1e-6);
    }
}
