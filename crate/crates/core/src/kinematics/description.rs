//! Robot description document schema.
//!
//! A description is a JSON object with three top-level keys:
//!
//! ```json
//! {
//!   "links": [
//!     { "name": "base", "spheres": [ { "center": [0, 0, 0.05], "radius": 0.06 } ] }
//!   ],
//!   "joints": [
//!     {
//!       "name": "j1", "type": "revolute", "parent": "base", "child": "link1",
//!       "origin": { "position": [0, 0, 0.2], "quaternion": [1, 0, 0, 0] },
//!       "axis": [0, 0, 1], "limits": [-3.14, 3.14],
//!       "passive": { "source": "j0", "coefficients": [0.0, 1.0] }
//!     }
//!   ],
//!   "collision_ignore_pairs": [ ["base", "link2"] ]
//! }
//! ```
//!
//! Unknown keys are rejected everywhere. A link may carry a `visual` entry of
//! any shape; it is accepted and ignored since only sphere geometry is used.

use serde::{Deserialize, Serialize};

use super::pose::PoseDoc;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RobotDescription {
    pub links: Vec<LinkDoc>,
    #[serde(default)]
    pub joints: Vec<JointDoc>,
    #[serde(default)]
    pub collision_ignore_pairs: Vec<[String; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LinkDoc {
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub spheres: Vec<SphereDoc>,
    #[serde(default, skip_serializing)]
    pub visual: Option<serde_json::Value>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SphereDoc {
    pub center: [f64; 3],
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum JointType {
    Revolute,
    Prismatic,
    Fixed,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct JointDoc {
    pub name: String,
    #[serde(rename = "type")]
    pub kind: JointType,
    pub parent: String,
    pub child: String,
    #[serde(default)]
    pub origin: PoseDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limits: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub passive: Option<PassiveDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PassiveDoc {
    pub source: String,
    pub coefficients: Vec<f64>,
}

impl RobotDescription {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("description serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unknown_top_level_key() {
        let text = r#"{"links": [{"name": "a"}], "joints": [], "extra": 1}"#;
        assert!(RobotDescription::from_json(text).is_err());
    }

    #[test]
    fn rejects_unknown_joint_key() {
        let text = r#"{"links": [{"name": "a"}, {"name": "b"}],
            "joints": [{"name": "j", "type": "fixed", "parent": "a", "child": "b", "mass": 2}]}"#;
        assert!(RobotDescription::from_json(text).is_err());
    }

    #[test]
    fn ignores_visual_payload() {
        let text = r#"{"links": [{"name": "a", "visual": {"mesh": "a.stl"}}]}"#;
        let d = RobotDescription::from_json(text).unwrap();
        assert_eq!(d.links.len(), 1);
    }
}
