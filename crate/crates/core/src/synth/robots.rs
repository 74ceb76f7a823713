//! Built-in robot descriptions used by tests, profiling and the CLI.

use crate::kinematics::description::{
    JointDoc, JointType, LinkDoc, PassiveDoc, RobotDescription, SphereDoc,
};
use crate::kinematics::{KinematicModel, PoseDoc};

/// Four-bar coupling of a finger's distal joint to its proximal joint.
pub const FOUR_BAR_COEFFICIENTS: [f64; 4] = [0.25, 0.9, 0.15, -0.04];

/// Fingertip labels of the built-in hands, thumb first.
pub const FINGERTIPS: [&str; 5] = ["thumb_tip", "index_tip", "middle_tip", "ring_tip", "pinky_tip"];

#[derive(Debug, Clone)]
pub struct DescriptionBuilder {
    doc: RobotDescription,
}

impl Default for DescriptionBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl DescriptionBuilder {
    pub fn new() -> Self {
        Self {
            doc: RobotDescription {
                links: Vec::new(),
                joints: Vec::new(),
                collision_ignore_pairs: Vec::new(),
            },
        }
    }

    pub fn link(mut self, name: &str, spheres: &[([f64; 3], f64)]) -> Self {
        self.doc.links.push(LinkDoc {
            name: name.to_string(),
            spheres: spheres
                .iter()
                .map(|&(center, radius)| SphereDoc { center, radius })
                .collect(),
            visual: None,
        });
        self
    }

    fn joint(
        mut self,
        name: &str,
        kind: JointType,
        parent: &str,
        child: &str,
        position: [f64; 3],
        axis: Option<[f64; 3]>,
        limits: Option<[f64; 2]>,
    ) -> Self {
        self.doc.joints.push(JointDoc {
            name: name.to_string(),
            kind,
            parent: parent.to_string(),
            child: child.to_string(),
            origin: PoseDoc {
                position,
                quaternion: [1.0, 0.0, 0.0, 0.0],
            },
            axis,
            limits,
            passive: None,
        });
        self
    }

    pub fn revolute(
        self,
        name: &str,
        parent: &str,
        child: &str,
        position: [f64; 3],
        axis: [f64; 3],
        limits: [f64; 2],
    ) -> Self {
        self.joint(name, JointType::Revolute, parent, child, position, Some(axis), Some(limits))
    }

    pub fn prismatic(
        self,
        name: &str,
        parent: &str,
        child: &str,
        position: [f64; 3],
        axis: [f64; 3],
        limits: [f64; 2],
    ) -> Self {
        self.joint(name, JointType::Prismatic, parent, child, position, Some(axis), Some(limits))
    }

    pub fn fixed(self, name: &str, parent: &str, child: &str, position: [f64; 3]) -> Self {
        self.joint(name, JointType::Fixed, parent, child, position, None, None)
    }

    /// Makes the most recently added joint passive.
    pub fn driven_by(mut self, source: &str, coefficients: &[f64]) -> Self {
        let j = self.doc.joints.last_mut().expect("a joint to make passive");
        j.passive = Some(PassiveDoc {
            source: source.to_string(),
            coefficients: coefficients.to_vec(),
        });
        self
    }

    pub fn origin_quaternion(mut self, wxyz: [f64; 4]) -> Self {
        let j = self.doc.joints.last_mut().expect("a joint");
        j.origin.quaternion = wxyz;
        self
    }

    pub fn ignore(mut self, a: &str, b: &str) -> Self {
        self.doc
            .collision_ignore_pairs
            .push([a.to_string(), b.to_string()]);
        self
    }

    pub fn description(self) -> RobotDescription {
        self.doc
    }

    /// Builds the model; built-in descriptions are valid by construction.
    pub fn build(self) -> KinematicModel {
        KinematicModel::from_description(&self.doc).expect("built-in description is valid")
    }
}

/// Planar 2R arm with unit links rotating about z; end frame `tool`.
/// Two spheres on each moving link.
pub fn planar_two_link() -> DescriptionBuilder {
    use std::f64::consts::PI;
    DescriptionBuilder::new()
        .link("base", &[])
        .link("link1", &[([0.3, 0.0, 0.0], 0.1), ([0.7, 0.0, 0.0], 0.1)])
        .link("link2", &[([0.3, 0.0, 0.0], 0.1), ([0.7, 0.0, 0.0], 0.1)])
        .link("tool", &[])
        .revolute("j1", "base", "link1", [0.0; 3], [0.0, 0.0, 1.0], [-PI, PI])
        .revolute("j2", "link1", "link2", [1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [-PI, PI])
        .fixed("tool_mount", "link2", "tool", [1.0, 0.0, 0.0])
}

fn column(zs: &[f64], radius: f64) -> Vec<([f64; 3], f64)> {
    zs.iter().map(|&z| ([0.0, 0.0, z], radius)).collect()
}

fn steps(start: f64, step: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| start + step * i as f64).collect()
}

/// Adds a 7-DoF arm (alternating z/y axes, straight up at zero) whose base
/// link is `{prefix}base`, mounted on `parent` at `mount` when given.
pub fn add_arm7(
    mut b: DescriptionBuilder,
    prefix: &str,
    mount: Option<(&str, [f64; 3])>,
) -> DescriptionBuilder {
    use std::f64::consts::PI;
    let n = |s: &str| format!("{prefix}{s}");
    b = b
        .link(&n("base"), &column(&[0.04, 0.10, 0.16], 0.06))
        .link(&n("link1"), &column(&[0.03, 0.07], 0.05))
        .link(&n("link2"), &column(&steps(0.025, 0.025, 11), 0.045))
        .link(&n("link3"), &column(&[0.02, 0.05, 0.08], 0.045))
        .link(&n("link4"), &column(&steps(0.025, 0.025, 11), 0.04))
        .link(&n("link5"), &column(&[0.02, 0.05, 0.08], 0.04))
        .link(&n("link6"), &column(&[0.02, 0.05, 0.08], 0.035))
        .link(&n("link7"), &column(&[0.04], 0.035))
        .link(&n("tool"), &column(&[0.02, 0.045, 0.07, 0.095], 0.03));
    if let Some((parent, at)) = mount {
        b = b.fixed(&n("mount"), parent, &n("base"), at);
    }
    let z = [0.0, 0.0, 1.0];
    let y = [0.0, 1.0, 0.0];
    b.revolute(&n("j1"), &n("base"), &n("link1"), [0.0, 0.0, 0.2], z, [-3.1, 3.1])
        .revolute(&n("j2"), &n("link1"), &n("link2"), [0.0, 0.0, 0.1], y, [-2.0, 2.0])
        .revolute(&n("j3"), &n("link2"), &n("link3"), [0.0, 0.0, 0.3], z, [-3.1, 3.1])
        .revolute(&n("j4"), &n("link3"), &n("link4"), [0.0, 0.0, 0.1], y, [-2.8, 2.8])
        .revolute(&n("j5"), &n("link4"), &n("link5"), [0.0, 0.0, 0.3], z, [-3.1, 3.1])
        .revolute(&n("j6"), &n("link5"), &n("link6"), [0.0, 0.0, 0.1], y, [-0.5 * PI * 1.6, 0.5 * PI * 1.6])
        .revolute(&n("j7"), &n("link6"), &n("link7"), [0.0, 0.0, 0.1], z, [-3.1, 3.1])
        .fixed(&n("tool_mount"), &n("link7"), &n("tool"), [0.0, 0.0, 0.08])
}

/// Single 7-DoF arm with 41 collision spheres; end frame `tool`.
pub fn arm7() -> DescriptionBuilder {
    add_arm7(DescriptionBuilder::new(), "", None)
}

/// A comfortable, collision-free, non-singular configuration of [`arm7`].
pub const ARM7_HOME: [f64; 7] = [0.0, 0.4, 0.0, 1.2, 0.0, 0.8, 0.0];

/// Two [`arm7`] arms on a shared `torso` root, 0.7 m apart along y.
/// Link names carry `left_` / `right_` prefixes.
pub fn dual_arm() -> DescriptionBuilder {
    let b = DescriptionBuilder::new().link("torso", &[]);
    let b = add_arm7(b, "left_", Some(("torso", [0.0, 0.35, 0.0])));
    add_arm7(b, "right_", Some(("torso", [0.0, -0.35, 0.0])))
}

/// Hand with a 2-DoF thumb and four single-actuator fingers whose distal
/// joints follow [`FOUR_BAR_COEFFICIENTS`]: `k = 6`, `n = 10`. When
/// `coupled` is false the distal joints are independent (`k = n = 10`).
pub fn hand(coupled: bool) -> DescriptionBuilder {
    let x = [1.0, 0.0, 0.0];
    let mut b = DescriptionBuilder::new()
        .link("palm", &[])
        .link("thumb_base", &[])
        .link("thumb_proximal", &[])
        .link("thumb_tip", &[])
        .revolute("thumb_rotator", "palm", "thumb_base", [0.035, -0.01, 0.03], [0.0, 0.0, 1.0], [-1.5, 0.0])
        .revolute("thumb_flexor", "thumb_base", "thumb_proximal", [0.04, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 1.4])
        .fixed("thumb_tip_mount", "thumb_proximal", "thumb_tip", [0.05, 0.0, 0.0]);
    let fingers = [("index", 0.03), ("middle", 0.01), ("ring", -0.01), ("pinky", -0.03)];
    for (name, _) in fingers {
        b = b
            .link(&format!("{name}_proximal"), &[])
            .link(&format!("{name}_distal"), &[])
            .link(&format!("{name}_tip"), &[]);
    }
    for (name, offset) in fingers {
        b = b.revolute(
            &format!("{name}_q1"),
            "palm",
            &format!("{name}_proximal"),
            [offset, 0.0, 0.09],
            x,
            [0.0, 1.6],
        );
    }
    for (name, _) in fingers {
        b = b.revolute(
            &format!("{name}_q2"),
            &format!("{name}_proximal"),
            &format!("{name}_distal"),
            [0.0, 0.0, 0.045],
            x,
            [0.0, 2.0],
        );
        if coupled {
            b = b.driven_by(&format!("{name}_q1"), &FOUR_BAR_COEFFICIENTS);
        }
        b = b.fixed(
            &format!("{name}_tip_mount"),
            &format!("{name}_distal"),
            &format!("{name}_tip"),
            [0.0, 0.0, 0.04],
        );
    }
    b
}

/// Two-link chain whose second joint mirrors the first (`c(q) = q`).
pub fn identity_mimic_pair(coupled: bool) -> DescriptionBuilder {
    let b = DescriptionBuilder::new()
        .link("base", &[])
        .link("l1", &[])
        .link("l2", &[])
        .link("tip", &[])
        .revolute("j1", "base", "l1", [0.0, 0.0, 0.1], [0.0, 1.0, 0.0], [-1.5, 1.5])
        .revolute("j2", "l1", "l2", [0.0, 0.0, 0.4], [0.0, 1.0, 0.0], [-1.5, 1.5]);
    let b = if coupled { b.driven_by("j1", &[0.0, 1.0]) } else { b };
    b.fixed("tip_mount", "l2", "tip", [0.1, 0.0, 0.3])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_dimensions() {
        let m = hand(true).build();
        assert_eq!((m.active_count(), m.total_count()), (6, 10));
        let m = hand(false).build();
        assert_eq!((m.active_count(), m.total_count()), (10, 10));
    }

    #[test]
    fn arm_has_enough_spheres() {
        let m = arm7().build();
        let spheres: usize = m.links().iter().map(|l| l.spheres.len()).sum();
        assert!(spheres >= 40, "{spheres}");
        assert_eq!(m.active_count(), 7);
        assert_eq!(dual_arm().build().active_count(), 14);
    }
}
