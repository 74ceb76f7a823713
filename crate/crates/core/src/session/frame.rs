use std::fmt;
use std::sync::Arc;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::kinematics::Pose;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HandSide {
    Left,
    Right,
}

impl HandSide {
    pub fn tag(self) -> &'static str {
        match self {
            HandSide::Left => "L",
            HandSide::Right => "R",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "L" => Some(HandSide::Left),
            "R" => Some(HandSide::Right),
            _ => None,
        }
    }
}

impl fmt::Display for HandSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HandSide::Left => "left",
            HandSide::Right => "right",
        })
    }
}

/// One tracked human hand: wrist pose plus keypoints in wrist coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct HandFrame {
    pub timestamp: f64,
    pub side: HandSide,
    pub wrist: Pose,
    pub keypoints: Vec<Vector3<f64>>,
    pub keypoint_labels: Arc<[String]>,
}

impl HandFrame {
    pub fn keypoint(&self, label: &str) -> Option<Vector3<f64>> {
        self.keypoint_labels
            .iter()
            .position(|l| l == label)
            .map(|i| self.keypoints[i])
    }

    pub fn is_finite(&self) -> bool {
        self.keypoints.iter().all(|k| k.iter().all(|c| c.is_finite()))
    }
}

/// Left and right hands sampled at one instant. A single-arm stream leaves
/// one side empty.
#[derive(Debug, Clone, PartialEq)]
pub struct BimanualFrame {
    pub timestamp: f64,
    pub left: Option<HandFrame>,
    pub right: Option<HandFrame>,
}

impl BimanualFrame {
    pub fn hand(&self, side: HandSide) -> Option<&HandFrame> {
        match side {
            HandSide::Left => self.left.as_ref(),
            HandSide::Right => self.right.as_ref(),
        }
    }
}
