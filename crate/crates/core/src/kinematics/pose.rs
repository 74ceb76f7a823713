use nalgebra::{Isometry3, Quaternion, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rigid transform: position in meters plus a unit quaternion.
///
/// Quaternions are exchanged in `(w, x, y, z)` order and normalized on
/// construction. `q` and `-q` denote the same orientation; every distance
/// and equality helper here is sign-invariant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            position: Vector3::zeros(),
            orientation: UnitQuaternion::identity(),
        }
    }

    pub fn new(position: Vector3<f64>, orientation: UnitQuaternion<f64>) -> Self {
        Self {
            position,
            orientation,
        }
    }

    pub fn from_translation(x: f64, y: f64, z: f64) -> Self {
        Self::new(Vector3::new(x, y, z), UnitQuaternion::identity())
    }

    /// Builds a pose from a position and a `(w, x, y, z)` quaternion.
    /// Fails on a zero-norm or non-finite quaternion.
    pub fn from_wxyz(position: [f64; 3], wxyz: [f64; 4]) -> Result<Self> {
        let q = Quaternion::new(wxyz[0], wxyz[1], wxyz[2], wxyz[3]);
        let norm = q.norm();
        if !norm.is_finite() || norm < 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "quaternion {wxyz:?} cannot be normalized"
            )));
        }
        if position.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite position {position:?}"
            )));
        }
        // unit input is kept bit-exact so poses survive serialization round trips
        let orientation = if (q.norm_squared() - 1.0).abs() <= 4.0 * f64::EPSILON {
            UnitQuaternion::new_unchecked(q)
        } else {
            UnitQuaternion::new_normalize(q)
        };
        Ok(Self::new(Vector3::from(position), orientation))
    }

    pub fn wxyz(&self) -> [f64; 4] {
        let q = self.orientation.quaternion();
        [q.w, q.i, q.j, q.k]
    }

    pub fn to_isometry(&self) -> Isometry3<f64> {
        Isometry3::from_parts(Translation3::from(self.position), self.orientation)
    }

    pub fn from_isometry(iso: &Isometry3<f64>) -> Self {
        Self::new(iso.translation.vector, iso.rotation)
    }

    /// `self ∘ other`: applies `other` in the frame of `self`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose::new(
            self.position + self.orientation * other.position,
            self.orientation * other.orientation,
        )
    }

    pub fn inverse(&self) -> Pose {
        let inv = self.orientation.inverse();
        Pose::new(-(inv * self.position), inv)
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.position + self.orientation * p
    }

    /// Geodesic rotation angle to `other` in radians, in `[0, π]`.
    pub fn rotation_distance(&self, other: &Pose) -> f64 {
        let rel = (self.orientation.inverse() * other.orientation).into_inner();
        2.0 * rel.vector().norm().atan2(rel.w.abs())
    }

    pub fn position_distance(&self, other: &Pose) -> f64 {
        (self.position - other.position).norm()
    }

    /// Sign-invariant approximate equality.
    pub fn approx_eq(&self, other: &Pose, tol: f64) -> bool {
        let a = self.orientation.quaternion().coords;
        let b = other.orientation.quaternion().coords;
        let same = (a - b).amax();
        let flipped = (a + b).amax();
        self.position_distance(other) <= tol && same.min(flipped) <= tol
    }
}

/// Serialized pose: `{ "position": [x, y, z], "quaternion": [w, x, y, z] }`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PoseDoc {
    pub position: [f64; 3],
    #[serde(default = "identity_wxyz")]
    pub quaternion: [f64; 4],
}

fn identity_wxyz() -> [f64; 4] {
    [1.0, 0.0, 0.0, 0.0]
}

impl Default for PoseDoc {
    fn default() -> Self {
        Self {
            position: [0.0; 3],
            quaternion: identity_wxyz(),
        }
    }
}

impl TryFrom<PoseDoc> for Pose {
    type Error = Error;

    fn try_from(doc: PoseDoc) -> Result<Self> {
        Pose::from_wxyz(doc.position, doc.quaternion)
    }
}

impl From<&Pose> for PoseDoc {
    fn from(p: &Pose) -> Self {
        Self {
            position: p.position.into(),
            quaternion: p.wxyz(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn quaternion_is_normalized_on_construction() {
        let p = Pose::from_wxyz([0.0; 3], [2.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((p.orientation.quaternion().norm() - 1.0).abs() < 1e-12);
        assert!(Pose::from_wxyz([0.0; 3], [0.0; 4]).is_err());
    }

    #[test]
    fn equality_is_sign_invariant() {
        let a = Pose::from_wxyz([1.0, 2.0, 3.0], [0.5, 0.5, 0.5, 0.5]).unwrap();
        let b = Pose::from_wxyz([1.0, 2.0, 3.0], [-0.5, -0.5, -0.5, -0.5]).unwrap();
        assert!(a.approx_eq(&b, 1e-12));
        assert!(a.rotation_distance(&b) < 1e-7);
    }

    #[test]
    fn compose_then_inverse_is_identity() {
        let a = Pose::new(
            Vector3::new(0.3, -0.2, 1.0),
            UnitQuaternion::from_euler_angles(0.1, 0.2, 0.3),
        );
        let id = a.compose(&a.inverse());
        assert!(id.approx_eq(&Pose::identity(), 1e-12));
    }

    #[test]
    fn rotation_distance_of_quarter_turn() {
        let a = Pose::identity();
        let b = Pose::new(
            Vector3::zeros(),
            UnitQuaternion::from_axis_angle(&Vector3::z_axis(), FRAC_PI_2),
        );
        assert!((a.rotation_distance(&b) - FRAC_PI_2).abs() < 1e-12);
    }
}
