//! Independent oracles shared by the integration tests. Nothing here calls
//! into the library's kinematics; everything is rebuilt from the raw
//! description document with plain arrays.

#![allow(dead_code)]

use std::collections::HashMap;

use teleop_core::kinematics::description::{JointType, RobotDescription};

pub type Mat4 = [[f64; 4]; 4];

pub fn identity() -> Mat4 {
    let mut m = [[0.0; 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

pub fn mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut c = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            c[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

fn rotation_from_wxyz(q: [f64; 4]) -> [[f64; 3]; 3] {
    let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    let [w, x, y, z] = q.map(|v| v / n);
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

/// Rodrigues' formula for a rotation by `angle` about unit `axis`.
fn axis_angle(axis: [f64; 3], angle: f64) -> [[f64; 3]; 3] {
    let n = axis.iter().map(|v| v * v).sum::<f64>().sqrt();
    let [x, y, z] = axis.map(|v| v / n);
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    [
        [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
        [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
        [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
    ]
}

fn homogeneous(r: [[f64; 3]; 3], p: [f64; 3]) -> Mat4 {
    let mut m = identity();
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = r[i][j];
        }
        m[i][3] = p[i];
    }
    m
}

/// Active joint names in the library's documented order: non-passive
/// movable joints in document order.
pub fn active_names(doc: &RobotDescription) -> Vec<String> {
    doc.joints
        .iter()
        .filter(|j| j.kind != JointType::Fixed && j.passive.is_none())
        .map(|j| j.name.clone())
        .collect()
}

/// World transforms of every link as 4×4 matrices, by walking the joint
/// list from the root and multiplying origin and motion transforms.
pub fn link_transforms(doc: &RobotDescription, active_q: &[f64]) -> HashMap<String, Mat4> {
    let names = active_names(doc);
    assert_eq!(names.len(), active_q.len());
    let mut value: HashMap<&str, f64> = names.iter().map(String::as_str).zip(active_q.iter().copied()).collect();
    for j in &doc.joints {
        if let Some(p) = &j.passive {
            let x = value[p.source.as_str()];
            let v = p.coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c);
            value.insert(j.name.as_str(), v);
        }
    }
    let children: Vec<&str> = doc.joints.iter().map(|j| j.child.as_str()).collect();
    let root = doc
        .links
        .iter()
        .find(|l| !children.contains(&l.name.as_str()))
        .expect("a root link");
    let mut out: HashMap<String, Mat4> = HashMap::new();
    out.insert(root.name.clone(), identity());
    let mut pending = doc.joints.len();
    while pending > 0 {
        pending = 0;
        for j in &doc.joints {
            if out.contains_key(&j.child) {
                continue;
            }
            let Some(parent) = out.get(&j.parent).copied() else {
                pending += 1;
                continue;
            };
            let origin = homogeneous(rotation_from_wxyz(j.origin.quaternion), j.origin.position);
            let q = value.get(j.name.as_str()).copied().unwrap_or(0.0);
            let motion = match j.kind {
                JointType::Fixed => identity(),
                JointType::Revolute => homogeneous(axis_angle(j.axis.unwrap(), q), [0.0; 3]),
                JointType::Prismatic => {
                    let a = j.axis.unwrap();
                    let n = a.iter().map(|v| v * v).sum::<f64>().sqrt();
                    homogeneous(axis_angle([0.0, 0.0, 1.0], 0.0), a.map(|v| v / n * q))
                }
            };
            out.insert(j.child.clone(), mul(&mul(&parent, &origin), &motion));
        }
    }
    out
}

pub fn position(m: &Mat4) -> [f64; 3] {
    [m[0][3], m[1][3], m[2][3]]
}

pub fn apply(m: &Mat4, p: [f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (i, o) in out.iter_mut().enumerate() {
        *o = m[i][0] * p[0] + m[i][1] * p[1] + m[i][2] * p[2] + m[i][3];
    }
    out
}

/// Sphere pairs that intersect, by brute force over every pair of spheres.
/// Pairs on the same link, on a parent/child link pair, or on an ignored
/// link pair are skipped. Indices follow link order, then sphere order.
pub fn penetrating_pairs(doc: &RobotDescription, active_q: &[f64]) -> Vec<(usize, usize)> {
    let t = link_transforms(doc, active_q);
    let mut spheres = Vec::new();
    for l in &doc.links {
        for s in &l.spheres {
            spheres.push((l.name.as_str(), apply(&t[&l.name], s.center), s.radius));
        }
    }
    let adjacent = |a: &str, b: &str| {
        doc.joints
            .iter()
            .any(|j| (j.parent == a && j.child == b) || (j.parent == b && j.child == a))
    };
    let ignored = |a: &str, b: &str| {
        doc.collision_ignore_pairs
            .iter()
            .any(|[x, y]| (x == a && y == b) || (x == b && y == a))
    };
    let mut out = Vec::new();
    for i in 0..spheres.len() {
        for j in i + 1..spheres.len() {
            let (la, ca, ra) = spheres[i];
            let (lb, cb, rb) = spheres[j];
            if la == lb || adjacent(la, lb) || ignored(la, lb) {
                continue;
            }
            let d2: f64 = (0..3).map(|k| (ca[k] - cb[k]).powi(2)).sum();
            if d2.sqrt() < ra + rb {
                out.push((i, j));
            }
        }
    }
    out
}

/// Relative error of an analytic gradient against a reference, normalized
/// by the reference norm (floored to avoid dividing by ~0).
pub fn relative_error(analytic: &[f64], reference: &[f64]) -> f64 {
    let diff = analytic
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let scale = reference.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-8);
    diff / scale
}

/// Central finite-difference gradient of `f` at `x`.
pub fn central_difference(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            xp[i] = x[i] + h;
            let fp = f(&xp);
            xp[i] = x[i] - h;
            let fm = f(&xp);
            xp[i] = x[i];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}
