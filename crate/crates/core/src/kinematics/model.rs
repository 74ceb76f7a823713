use std::collections::HashMap;
use std::path::Path;

use nalgebra::{Isometry3, Translation3, UnitQuaternion, Vector3};

use super::description::{JointType, RobotDescription};
use super::pose::Pose;
use crate::error::{Error, Result};

/// Single-source polynomial coupling `q_j = Σ a_d · q_source^d`, degree ≤ 3.
#[derive(Debug, Clone, PartialEq)]
pub struct PassiveMap {
    pub source: usize,
    pub coefficients: Vec<f64>,
}

impl PassiveMap {
    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (d, c)| acc * x + d as f64 * c)
    }

    /// Exact `(min, max)` of the polynomial over `[lo, hi]`.
    pub fn range_over(&self, lo: f64, hi: f64) -> (f64, f64) {
        let mut candidates = vec![lo, hi];
        // derivative a1 + 2 a2 x + 3 a3 x^2
        let c = |d: usize| self.coefficients.get(d).copied().unwrap_or(0.0);
        let (a, b, cc) = (3.0 * c(3), 2.0 * c(2), c(1));
        if a.abs() > 0.0 {
            let disc = b * b - 4.0 * a * cc;
            if disc >= 0.0 {
                let s = disc.sqrt();
                candidates.push((-b + s) / (2.0 * a));
                candidates.push((-b - s) / (2.0 * a));
            }
        } else if b.abs() > 0.0 {
            candidates.push(-cc / b);
        }
        candidates
            .into_iter()
            .filter(|x| *x >= lo && *x <= hi)
            .map(|x| self.eval(x))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(mn, mx), v| {
                (mn.min(v), mx.max(v))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JointKind {
    Revolute,
    Prismatic,
    Fixed,
}

#[derive(Debug, Clone)]
pub struct Joint {
    pub name: String,
    pub kind: JointKind,
    /// Unit axis in the joint frame (zero for fixed joints).
    pub axis: Vector3<f64>,
    /// Fixed transform from the parent link frame to the joint frame.
    pub origin: Isometry3<f64>,
    pub parent_link: usize,
    pub child_link: usize,
    pub passive: Option<PassiveMap>,
}

impl Joint {
    pub fn is_movable(&self) -> bool {
        self.kind != JointKind::Fixed
    }

    /// Motion of the joint at position `q`, in the joint frame.
    pub(crate) fn motion(&self, q: f64) -> Isometry3<f64> {
        match self.kind {
            JointKind::Revolute => Isometry3::from_parts(
                Translation3::identity(),
                UnitQuaternion::from_scaled_axis(self.axis * q),
            ),
            JointKind::Prismatic => {
                Isometry3::from_parts(Translation3::from(self.axis * q), UnitQuaternion::identity())
            }
            JointKind::Fixed => Isometry3::identity(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSphere {
    pub center: Vector3<f64>,
    pub radius: f64,
}

#[derive(Debug, Clone)]
pub struct Link {
    pub name: String,
    pub spheres: Vec<LinkSphere>,
    pub parent_joint: Option<usize>,
}

/// Immutable joint/link tree.
///
/// Joint indices `0..k` are active, `k..n` passive and `n..` fixed; within
/// each class the document order is preserved. Configuration vectors are
/// either the active `k`-vector or the full `n`-vector of movable joints.
#[derive(Debug, Clone)]
pub struct KinematicModel {
    links: Vec<Link>,
    joints: Vec<Joint>,
    active_count: usize,
    total_count: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    root: usize,
    link_lookup: HashMap<String, usize>,
    /// All joints, parents before children.
    topo_order: Vec<usize>,
    /// Movable joints between the root and each link, root first.
    ancestors: Vec<Vec<usize>>,
    ignore_pairs: Vec<(usize, usize)>,
}

impl KinematicModel {
    pub fn load_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::load_str(&text)
    }

    pub fn load_str(text: &str) -> Result<Self> {
        let doc = RobotDescription::from_json(text)?;
        Self::from_description(&doc)
    }

    pub fn from_description(doc: &RobotDescription) -> Result<Self> {
        load_model(doc)
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn active_count(&self) -> usize {
        self.active_count
    }

    pub fn total_count(&self) -> usize {
        self.total_count
    }

    pub fn lower_limits(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper_limits(&self) -> &[f64] {
        &self.upper
    }

    pub fn active_lower(&self) -> &[f64] {
        &self.lower[..self.active_count]
    }

    pub fn active_upper(&self) -> &[f64] {
        &self.upper[..self.active_count]
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn link_index(&self, name: &str) -> Result<usize> {
        self.link_lookup
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownFrame(name.to_string()))
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joints.iter().position(|j| j.name == name)
    }

    pub fn active_joint_names(&self) -> impl Iterator<Item = &str> {
        self.joints[..self.active_count].iter().map(|j| j.name.as_str())
    }

    pub(crate) fn topo_order(&self) -> &[usize] {
        &self.topo_order
    }

    pub(crate) fn ancestors(&self, link: usize) -> &[usize] {
        &self.ancestors[link]
    }

    pub fn ignore_pairs(&self) -> &[(usize, usize)] {
        &self.ignore_pairs
    }

    /// Link holding the parent side of `link`'s parent joint.
    pub fn parent_link(&self, link: usize) -> Option<usize> {
        self.links[link]
            .parent_joint
            .map(|j| self.joints[j].parent_link)
    }

    pub fn check_active(&self, active_q: &[f64]) -> Result<()> {
        if active_q.len() != self.active_count {
            return Err(Error::DimensionMismatch {
                expected: self.active_count,
                got: active_q.len(),
            });
        }
        Ok(())
    }

    /// Dimension, finiteness and limit check of an active configuration.
    pub fn check_within_limits(&self, active_q: &[f64]) -> Result<()> {
        self.check_active(active_q)?;
        for (i, &v) in active_q.iter().enumerate() {
            if !v.is_finite() || v < self.lower[i] || v > self.upper[i] {
                return Err(Error::OutOfLimits {
                    joint: self.joints[i].name.clone(),
                    value: v,
                    lower: self.lower[i],
                    upper: self.upper[i],
                });
            }
        }
        Ok(())
    }

    /// Expands an active configuration to all movable joints.
    pub fn full_config(&self, active_q: &[f64]) -> Result<Vec<f64>> {
        self.check_active(active_q)?;
        let mut full = vec![0.0; self.total_count];
        self.fill_full_config(active_q, &mut full);
        Ok(full)
    }

    pub(crate) fn fill_full_config(&self, active_q: &[f64], full: &mut [f64]) {
        full[..self.active_count].copy_from_slice(active_q);
        for j in self.active_count..self.total_count {
            let map = self.joints[j].passive.as_ref().expect("passive joint has a map");
            full[j] = map.eval(active_q[map.source]);
        }
    }

    /// Folds an `n`-wide derivative row into the `k` active joints:
    /// `out_i = full_i + Σ_j (dc_j/dq_i) · full_j`.
    pub fn fold_gradient(&self, active_q: &[f64], full: &[f64], out: &mut [f64]) {
        out[..self.active_count].copy_from_slice(&full[..self.active_count]);
        for j in self.active_count..self.total_count {
            let map = self.joints[j].passive.as_ref().expect("passive joint has a map");
            out[map.source] += map.derivative(active_q[map.source]) * full[j];
        }
    }

    pub fn clamp_active(&self, active_q: &mut [f64]) {
        for (i, v) in active_q.iter_mut().enumerate() {
            *v = v.clamp(self.lower[i], self.upper[i]);
        }
    }

    pub fn active_midpoint(&self) -> Vec<f64> {
        (0..self.active_count)
            .map(|i| 0.5 * (self.lower[i] + self.upper[i]))
            .collect()
    }

    /// Fixed origin of a joint as a [`Pose`].
    pub fn joint_origin(&self, joint: usize) -> Pose {
        Pose::from_isometry(&self.joints[joint].origin)
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidModel(msg.into())
}

/// Validates a description and builds the model.
pub fn load_model(doc: &RobotDescription) -> Result<KinematicModel> {
    if doc.links.is_empty() {
        return Err(invalid("no links"));
    }
    let mut link_lookup = HashMap::new();
    let mut links = Vec::with_capacity(doc.links.len());
    for l in &doc.links {
        if link_lookup.insert(l.name.clone(), links.len()).is_some() {
            return Err(invalid(format!("duplicate link `{}`", l.name)));
        }
        let mut spheres = Vec::with_capacity(l.spheres.len());
        for s in &l.spheres {
            if !(s.radius > 0.0 && s.radius.is_finite()) || s.center.iter().any(|c| !c.is_finite()) {
                return Err(invalid(format!(
                    "link `{}` has an invalid sphere (radius {})",
                    l.name, s.radius
                )));
            }
            spheres.push(LinkSphere {
                center: Vector3::from(s.center),
                radius: s.radius,
            });
        }
        links.push(Link {
            name: l.name.clone(),
            spheres,
            parent_joint: None,
        });
    }

    let mut names = HashMap::new();
    for (i, j) in doc.joints.iter().enumerate() {
        if names.insert(j.name.as_str(), i).is_some() {
            return Err(invalid(format!("duplicate joint `{}`", j.name)));
        }
    }

    // Class order: active, passive, fixed; document order within a class.
    let class = |j: &super::description::JointDoc| match (j.kind, &j.passive) {
        (JointType::Fixed, _) => 2,
        (_, Some(_)) => 1,
        (_, None) => 0,
    };
    let mut doc_order: Vec<usize> = (0..doc.joints.len()).collect();
    doc_order.sort_by_key(|&i| class(&doc.joints[i]));
    let mut new_index = vec![0usize; doc.joints.len()];
    for (new, &old) in doc_order.iter().enumerate() {
        new_index[old] = new;
    }
    let active_count = doc.joints.iter().filter(|j| class(j) == 0).count();
    let total_count = active_count + doc.joints.iter().filter(|j| class(j) == 1).count();

    let mut joints = Vec::with_capacity(doc.joints.len());
    let mut lower = Vec::with_capacity(total_count);
    let mut upper = Vec::with_capacity(total_count);
    for &old in &doc_order {
        let jd = &doc.joints[old];
        let parent_link = *link_lookup
            .get(&jd.parent)
            .ok_or_else(|| invalid(format!("joint `{}`: unknown parent `{}`", jd.name, jd.parent)))?;
        let child_link = *link_lookup
            .get(&jd.child)
            .ok_or_else(|| invalid(format!("joint `{}`: unknown child `{}`", jd.name, jd.child)))?;
        if parent_link == child_link {
            return Err(Error::CycleInLinks(jd.child.clone()));
        }
        let index = joints.len();
        if let Some(prev) = links[child_link].parent_joint {
            let prev_name: &String = &doc.joints[doc_order[prev]].name;
            return Err(invalid(format!(
                "link `{}` has two parent joints (`{}`, `{}`)",
                jd.child, prev_name, jd.name
            )));
        }
        links[child_link].parent_joint = Some(index);

        let origin = Pose::try_from(jd.origin)
            .map_err(|e| invalid(format!("joint `{}` origin: {e}", jd.name)))?
            .to_isometry();
        let kind = match jd.kind {
            JointType::Revolute => JointKind::Revolute,
            JointType::Prismatic => JointKind::Prismatic,
            JointType::Fixed => JointKind::Fixed,
        };
        let axis = if kind == JointKind::Fixed {
            if jd.passive.is_some() {
                return Err(invalid(format!("fixed joint `{}` cannot be passive", jd.name)));
            }
            Vector3::zeros()
        } else {
            let a = Vector3::from(
                jd.axis
                    .ok_or_else(|| invalid(format!("joint `{}` has no axis", jd.name)))?,
            );
            let norm = a.norm();
            if !norm.is_finite() || norm < 1e-9 {
                return Err(invalid(format!("joint `{}` has a zero axis", jd.name)));
            }
            let [lo, hi] = jd
                .limits
                .ok_or_else(|| invalid(format!("joint `{}` has no limits", jd.name)))?;
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(invalid(format!(
                    "joint `{}` has invalid limits [{lo}, {hi}]",
                    jd.name
                )));
            }
            lower.push(lo);
            upper.push(hi);
            a / norm
        };
        let passive = match &jd.passive {
            None => None,
            Some(p) => {
                let src_old = *names.get(p.source.as_str()).ok_or_else(|| Error::PassiveSource {
                    joint: jd.name.clone(),
                    source_joint: p.source.clone(),
                })?;
                let source = new_index[src_old];
                if source >= active_count {
                    return Err(Error::PassiveSource {
                        joint: jd.name.clone(),
                        source_joint: p.source.clone(),
                    });
                }
                if p.coefficients.is_empty() || p.coefficients.len() > 4 {
                    return Err(invalid(format!(
                        "joint `{}`: passive map needs 1 to 4 coefficients, got {}",
                        jd.name,
                        p.coefficients.len()
                    )));
                }
                if p.coefficients.iter().any(|c| !c.is_finite()) {
                    return Err(invalid(format!("joint `{}`: non-finite coefficient", jd.name)));
                }
                Some(PassiveMap {
                    source,
                    coefficients: p.coefficients.clone(),
                })
            }
        };
        joints.push(Joint {
            name: jd.name.clone(),
            kind,
            axis,
            origin,
            parent_link,
            child_link,
            passive,
        });
    }

    // Passive range check against the passive joint's own limits.
    for j in active_count..total_count {
        let map = joints[j].passive.as_ref().expect("passive");
        let (mn, mx) = map.range_over(lower[map.source], upper[map.source]);
        const SLACK: f64 = 1e-12;
        for value in [mn, mx] {
            if value < lower[j] - SLACK || value > upper[j] + SLACK {
                return Err(Error::PassiveLimit {
                    joint: joints[j].name.clone(),
                    value,
                    lower: lower[j],
                    upper: upper[j],
                });
            }
        }
    }

    let roots: Vec<usize> = (0..links.len())
        .filter(|&l| links[l].parent_joint.is_none())
        .collect();
    let root = match roots.as_slice() {
        [r] => *r,
        [] => return Err(Error::CycleInLinks(links[0].name.clone())),
        many => {
            return Err(invalid(format!(
                "description has {} root links ({}), expected one",
                many.len(),
                many.iter()
                    .map(|&l| links[l].name.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            )))
        }
    };

    let mut children: Vec<Vec<usize>> = vec![Vec::new(); links.len()];
    for (i, j) in joints.iter().enumerate() {
        children[j.parent_link].push(i);
    }
    for c in &mut children {
        c.sort_unstable();
    }
    let mut topo_order = Vec::with_capacity(joints.len());
    let mut ancestors = vec![Vec::new(); links.len()];
    let mut visited = vec![false; links.len()];
    visited[root] = true;
    let mut stack = vec![root];
    while let Some(l) = stack.pop() {
        for &ji in children[l].iter().rev() {
            let child = joints[ji].child_link;
            if visited[child] {
                return Err(Error::CycleInLinks(links[child].name.clone()));
            }
            visited[child] = true;
            topo_order.push(ji);
            let mut chain = ancestors[l].clone();
            if joints[ji].is_movable() {
                chain.push(ji);
            }
            ancestors[child] = chain;
            stack.push(child);
        }
    }
    if let Some(l) = visited.iter().position(|v| !v) {
        return Err(Error::CycleInLinks(links[l].name.clone()));
    }

    let mut ignore_pairs = Vec::with_capacity(doc.collision_ignore_pairs.len());
    for [a, b] in &doc.collision_ignore_pairs {
        let ia = *link_lookup
            .get(a)
            .ok_or_else(|| invalid(format!("collision_ignore_pairs: unknown link `{a}`")))?;
        let ib = *link_lookup
            .get(b)
            .ok_or_else(|| invalid(format!("collision_ignore_pairs: unknown link `{b}`")))?;
        ignore_pairs.push((ia.min(ib), ia.max(ib)));
    }

    Ok(KinematicModel {
        links,
        joints,
        active_count,
        total_count,
        lower,
        upper,
        root,
        link_lookup,
        topo_order,
        ancestors,
        ignore_pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(passive: Option<(&str, Vec<f64>)>, limits2: [f64; 2]) -> String {
        let passive = passive
            .map(|(s, c)| format!(r#", "passive": {{"source": "{s}", "coefficients": {c:?}}}"#))
            .unwrap_or_default();
        format!(
            r#"{{
            "links": [{{"name": "base"}}, {{"name": "l1"}}, {{"name": "l2"}}],
            "joints": [
              {{"name": "j1", "type": "revolute", "parent": "base", "child": "l1",
                "axis": [0, 0, 1], "limits": [-1, 1]}},
              {{"name": "j2", "type": "revolute", "parent": "l1", "child": "l2",
                "origin": {{"position": [1, 0, 0]}},
                "axis": [0, 0, 1], "limits": {limits2:?}{passive}}}
            ]}}"#
        )
    }

    #[test]
    fn minimal_chain_has_two_active_joints() {
        let m = KinematicModel::load_str(&chain(None, [-1.0, 1.0])).unwrap();
        assert_eq!((m.total_count(), m.active_count()), (2, 2));
    }

    #[test]
    fn identity_mimic_is_passive() {
        let m = KinematicModel::load_str(&chain(Some(("j1", vec![0.0, 1.0])), [-1.0, 1.0])).unwrap();
        assert_eq!((m.total_count(), m.active_count()), (2, 1));
        assert_eq!(m.full_config(&[0.3]).unwrap(), vec![0.3, 0.3]);
    }

    #[test]
    fn passive_map_leaving_limits_is_rejected() {
        let err = KinematicModel::load_str(&chain(Some(("j1", vec![0.0, 2.0])), [-1.0, 1.0]))
            .unwrap_err();
        assert!(matches!(err, Error::PassiveLimit { .. }), "{err}");
    }

    #[test]
    fn polynomial_interior_extremum_is_checked() {
        // 0.5 - q^2 over [-1, 1]: endpoints give -0.5, the interior peak 0.5 exceeds 0.4.
        let err = KinematicModel::load_str(&chain(Some(("j1", vec![0.5, 0.0, -1.0])), [-1.0, 0.4]))
            .unwrap_err();
        assert!(matches!(err, Error::PassiveLimit { .. }), "{err}");
    }

    #[test]
    fn passive_source_must_be_active() {
        let text = r#"{
            "links": [{"name": "a"}, {"name": "b"}, {"name": "c"}, {"name": "d"}],
            "joints": [
              {"name": "j1", "type": "revolute", "parent": "a", "child": "b", "axis": [0,0,1], "limits": [-1,1]},
              {"name": "j2", "type": "revolute", "parent": "b", "child": "c", "axis": [0,0,1], "limits": [-1,1],
               "passive": {"source": "j1", "coefficients": [0, 1]}},
              {"name": "j3", "type": "revolute", "parent": "c", "child": "d", "axis": [0,0,1], "limits": [-1,1],
               "passive": {"source": "j2", "coefficients": [0, 1]}}
            ]}"#;
        let err = KinematicModel::load_str(text).unwrap_err();
        assert!(matches!(err, Error::PassiveSource { .. }), "{err}");
    }

    #[test]
    fn cycle_is_rejected() {
        let text = r#"{
            "links": [{"name": "root"}, {"name": "a"}, {"name": "b"}],
            "joints": [
              {"name": "j1", "type": "fixed", "parent": "a", "child": "b"},
              {"name": "j2", "type": "fixed", "parent": "b", "child": "a"}
            ]}"#;
        let err = KinematicModel::load_str(text).unwrap_err();
        assert!(matches!(err, Error::CycleInLinks(_)), "{err}");
    }

    #[test]
    fn malformed_document_is_rejected() {
        assert!(matches!(
            KinematicModel::load_str("{ not json").unwrap_err(),
            Error::Json(_)
        ));
        assert!(KinematicModel::load_str(r#"{"links": []}"#).is_err());
    }

    #[test]
    fn active_joints_come_first() {
        let text = r#"{
            "links": [{"name": "a"}, {"name": "b"}, {"name": "c"}, {"name": "d"}],
            "joints": [
              {"name": "fixed", "type": "fixed", "parent": "a", "child": "b"},
              {"name": "mimic", "type": "revolute", "parent": "b", "child": "c", "axis": [1,0,0], "limits": [-1,1],
               "passive": {"source": "drive", "coefficients": [0, 0.5]}},
              {"name": "drive", "type": "prismatic", "parent": "c", "child": "d", "axis": [0,0,2], "limits": [-1,1]}
            ]}"#;
        let m = KinematicModel::load_str(text).unwrap();
        let names: Vec<_> = m.joints().iter().map(|j| j.name.as_str()).collect();
        assert_eq!(names, ["drive", "mimic", "fixed"]);
        assert!((m.joints()[0].axis.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn polynomial_evaluation() {
        let p = PassiveMap {
            source: 0,
            coefficients: vec![0.0, 0.5, 0.1],
        };
        assert!((p.eval(1.0) - 0.6).abs() < 1e-15);
        assert!((p.derivative(1.0) - 0.7).abs() < 1e-15);
    }
}
