use std::path::Path;

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Quaternion norms may deviate from one by at most this much once stored.
pub const QUATERNION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Joint {
    pub name: String,
    pub parent: Option<usize>,
    pub rest: [f64; 3],
}

/// Segment between a joint and its parent. The bone is driven by the
/// rotation of its proximal (parent) joint.
#[derive(Debug, Clone, PartialEq)]
pub struct Bone {
    pub proximal: usize,
    pub distal: usize,
    pub rest_start: Vector3<f64>,
    pub rest_end: Vector3<f64>,
    /// Depth of the distal joint; the root has depth 0.
    pub depth: usize,
}

impl Bone {
    pub fn midpoint(&self) -> Vector3<f64> {
        0.5 * (self.rest_start + self.rest_end)
    }

    pub fn length(&self) -> f64 {
        (self.rest_end - self.rest_start).norm()
    }

    /// Distance from `p` to the rest segment.
    pub fn distance(&self, p: &Vector3<f64>) -> f64 {
        point_segment_distance(p, &self.rest_start, &self.rest_end)
    }
}

pub fn point_segment_distance(p: &Vector3<f64>, a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 {
        ((p - a).dot(&ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p - (a + t * ab)).norm()
}

/// Joint hierarchy in rest pose. Joints are topologically sorted: the root
/// comes first and every parent precedes its children.
#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    joints: Vec<Joint>,
    bones: Vec<Bone>,
    depths: Vec<usize>,
}

impl Skeleton {
    pub fn new(joints: Vec<Joint>) -> Result<Self> {
        if joints.is_empty() {
            return Err(Error::InvalidSkeleton("skeleton has no joints".into()));
        }
        let roots = joints.iter().filter(|j| j.parent.is_none()).count();
        if roots != 1 || joints[0].parent.is_some() {
            return Err(Error::InvalidSkeleton(format!(
                "expected exactly one root at index 0, found {roots} roots"
            )));
        }
        let mut depths = vec![0usize; joints.len()];
        let mut bones = Vec::new();
        for (j, joint) in joints.iter().enumerate() {
            if !joint.rest.iter().all(|c| c.is_finite()) {
                return Err(Error::InvalidSkeleton(format!(
                    "joint {j} has a non-finite rest position"
                )));
            }
            let Some(p) = joint.parent else { continue };
            if p >= j {
                return Err(Error::InvalidSkeleton(format!(
                    "joint {j} ({}) has parent {p}; parents must precede children",
                    joint.name
                )));
            }
            depths[j] = depths[p] + 1;
            let bone = Bone {
                proximal: p,
                distal: j,
                rest_start: Vector3::from(joints[p].rest),
                rest_end: Vector3::from(joint.rest),
                depth: depths[j],
            };
            if !(bone.length() > 0.0) {
                return Err(Error::InvalidSkeleton(format!(
                    "bone {}-{} has zero rest length",
                    joints[p].name, joint.name
                )));
            }
            bones.push(bone);
        }
        Ok(Skeleton { joints, bones, depths })
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn bones(&self) -> &[Bone] {
        &self.bones
    }

    pub fn n_joints(&self) -> usize {
        self.joints.len()
    }

    pub fn n_bones(&self) -> usize {
        self.bones.len()
    }

    pub fn depth(&self, joint: usize) -> usize {
        self.depths[joint]
    }

    pub fn rest_position(&self, joint: usize) -> Vector3<f64> {
        Vector3::from(self.joints[joint].rest)
    }

    /// The bone whose rotation a joint carries: its first outgoing bone, or
    /// the incoming bone for leaves. `None` only for a bone-less skeleton.
    pub fn joint_bone(&self, joint: usize) -> Option<usize> {
        self.bones
            .iter()
            .position(|b| b.proximal == joint)
            .or_else(|| self.bones.iter().position(|b| b.distal == joint))
    }

    /// Applies a rigid motion to every rest position.
    pub fn transformed(&self, rotation: &Matrix3<f64>, translation: &Vector3<f64>) -> Result<Skeleton> {
        let joints = self
            .joints
            .iter()
            .map(|j| {
                let p = rotation * Vector3::from(j.rest) + translation;
                Joint {
                    rest: [p.x, p.y, p.z],
                    ..j.clone()
                }
            })
            .collect();
        Skeleton::new(joints)
    }
}

/// Local joint rotations plus a root translation.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseFrame {
    pub rotations: Vec<UnitQuaternion<f64>>,
    pub root_translation: Vector3<f64>,
}

impl PoseFrame {
    pub fn identity(n_joints: usize) -> Self {
        PoseFrame {
            rotations: vec![UnitQuaternion::identity(); n_joints],
            root_translation: Vector3::zeros(),
        }
    }

    /// Builds a pose from `[w, x, y, z]` quaternions, renormalizing each.
    pub fn from_wxyz(rotations: &[[f64; 4]], root_translation: [f64; 3]) -> Result<Self> {
        let rotations = rotations
            .iter()
            .enumerate()
            .map(|(i, q)| {
                let q = Quaternion::new(q[0], q[1], q[2], q[3]);
                let norm = q.norm();
                if !norm.is_finite() || norm < 1e-6 {
                    return Err(Error::InvalidPose(format!("joint {i}: degenerate quaternion")));
                }
                Ok(UnitQuaternion::new_normalize(q))
            })
            .collect::<Result<Vec<_>>>()?;
        if !root_translation.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidPose("non-finite root translation".into()));
        }
        Ok(PoseFrame {
            rotations,
            root_translation: Vector3::from(root_translation),
        })
    }

    pub fn set_rotation(&mut self, joint: usize, rotation: UnitQuaternion<f64>) {
        self.rotations[joint] = rotation;
    }

    fn check(&self, skel: &Skeleton) -> Result<()> {
        if self.rotations.len() != skel.n_joints() {
            return Err(Error::InvalidPose(format!(
                "pose has {} rotations, skeleton has {} joints",
                self.rotations.len(),
                skel.n_joints()
            )));
        }
        if let Some(i) = self
            .rotations
            .iter()
            .position(|q| (q.quaternion().norm() - 1.0).abs() > QUATERNION_TOLERANCE)
        {
            return Err(Error::InvalidPose(format!("joint {i}: quaternion is not normalized")));
        }
        Ok(())
    }
}

/// Rigid motion of one bone, relative to the rest pose: a rest point `p`
/// maps to `pivot_world + R (p - pivot_rest)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoneTransform {
    pub rotation: Matrix3<f64>,
    pub pivot_rest: Vector3<f64>,
    pub pivot_world: Vector3<f64>,
}

impl BoneTransform {
    /// Evaluated in displacement form so that the identity motion returns
    /// `p` bit-for-bit.
    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        let d = p - self.pivot_rest;
        p + (self.rotation * d - d) + (self.pivot_world - self.pivot_rest)
    }
}

/// Forward-kinematics output.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonPose {
    pub joint_rotations: Vec<Matrix3<f64>>,
    pub joint_positions: Vec<Vector3<f64>>,
    pub bones: Vec<BoneTransform>,
}

impl SkeletonPose {
    pub fn bone_rotations(&self) -> Vec<Matrix3<f64>> {
        self.bones.iter().map(|b| b.rotation).collect()
    }
}

/// Composes joint transforms root-to-leaf.
pub fn forward_kinematics(skel: &Skeleton, pose: &PoseFrame) -> Result<SkeletonPose> {
    pose.check(skel)?;
    let n = skel.n_joints();
    let mut rot = Vec::with_capacity(n);
    let mut pos: Vec<Vector3<f64>> = Vec::with_capacity(n);
    for (j, joint) in skel.joints().iter().enumerate() {
        let local = pose.rotations[j].to_rotation_matrix().into_inner();
        let rest = Vector3::from(joint.rest);
        match joint.parent {
            None => {
                rot.push(local);
                pos.push(rest + pose.root_translation);
            }
            Some(p) => {
                let parent_rest = skel.rest_position(p);
                let d = rest - parent_rest;
                let world = rest + (pos[p] - parent_rest) + (rot[p] * d - d);
                rot.push(rot[p] * local);
                pos.push(world);
            }
        }
    }
    let bones = skel
        .bones()
        .iter()
        .map(|b| BoneTransform {
            rotation: rot[b.proximal],
            pivot_rest: b.rest_start,
            pivot_world: pos[b.proximal],
        })
        .collect();
    Ok(SkeletonPose {
        joint_rotations: rot,
        joint_positions: pos,
        bones,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrameSpec {
    #[serde(default)]
    pub root_translation: [f64; 3],
    pub rotations: Vec<[f64; 4]>,
}

/// Skeleton plus animation, as stored on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RigFile {
    pub joints: Vec<Joint>,
    #[serde(default)]
    pub frames: Vec<FrameSpec>,
}

impl RigFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn skeleton(&self) -> Result<Skeleton> {
        Skeleton::new(self.joints.clone())
    }

    pub fn poses(&self) -> Result<Vec<PoseFrame>> {
        self.frames
            .iter()
            .enumerate()
            .map(|(i, f)| {
                if f.rotations.len() != self.joints.len() {
                    return Err(Error::InvalidPose(format!(
                        "frame {i} has {} rotations for {} joints",
                        f.rotations.len(),
                        self.joints.len()
                    )));
                }
                PoseFrame::from_wxyz(&f.rotations, f.root_translation)
            })
            .collect()
    }
}

impl FrameSpec {
    pub fn from_pose(pose: &PoseFrame) -> Self {
        FrameSpec {
            root_translation: pose.root_translation.into(),
            rotations: pose.rotations.iter().map(|q| [q.w, q.i, q.j, q.k]).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn joint(name: &str, parent: Option<usize>, rest: [f64; 3]) -> Joint {
        Joint {
            name: name.into(),
            parent,
            rest,
        }
    }

    fn chain() -> Skeleton {
        Skeleton::new(vec![
            joint("root", None, [0.0, 0.0, 0.0]),
            joint("mid", Some(0), [1.0, 0.0, 0.0]),
            joint("tip", Some(1), [2.0, 0.5, 0.0]),
        ])
        .unwrap()
    }

    #[test]
    fn identity_pose_is_exact() {
        let skel = chain();
        let fk = forward_kinematics(&skel, &PoseFrame::identity(3)).unwrap();
        for (j, p) in fk.joint_positions.iter().enumerate() {
            assert_eq!(*p, skel.rest_position(j));
        }
        for b in &fk.bones {
            assert_eq!(b.rotation, Matrix3::identity());
        }
    }

    #[test]
    fn single_link_rotation() {
        let skel = Skeleton::new(vec![
            joint("a", None, [0.5, 0.2, 0.0]),
            joint("b", Some(0), [1.5, 0.2, 0.3]),
        ])
        .unwrap();
        let mut pose = PoseFrame::identity(2);
        pose.rotations[0] = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), FRAC_PI_2);
        let fk = forward_kinematics(&skel, &pose).unwrap();
        let rz = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        let expected = skel.rest_position(0) + rz * (skel.rest_position(1) - skel.rest_position(0));
        assert!((fk.joint_positions[1] - expected).norm() < 1e-15);
        assert!((fk.bones[0].rotation - rz).abs().max() < 1e-15);
    }

    #[test]
    fn chain_matches_homogeneous_matrix_product() {
        let skel = chain();
        let mut pose = PoseFrame::identity(3);
        pose.rotations[0] = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), 0.4);
        pose.rotations[1] = UnitQuaternion::from_axis_angle(&Vector3::y_axis(), -1.1);
        pose.root_translation = Vector3::new(0.3, -0.2, 0.7);
        let fk = forward_kinematics(&skel, &pose).unwrap();

        // Independent oracle: 4x4 chain T(t) T(r0) R0 T(-r0) T(r1) R1 T(-r1).
        use nalgebra::Matrix4;
        let homog = |r: Matrix3<f64>, about: Vector3<f64>| {
            let mut m = Matrix4::identity();
            m.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
            let t = about - r * about;
            m.fixed_view_mut::<3, 1>(0, 3).copy_from(&t);
            m
        };
        let mut t = Matrix4::identity();
        t.fixed_view_mut::<3, 1>(0, 3).copy_from(&pose.root_translation);
        let m =
            t * homog(
                pose.rotations[0].to_rotation_matrix().into_inner(),
                skel.rest_position(0),
            ) * homog(
                pose.rotations[1].to_rotation_matrix().into_inner(),
                skel.rest_position(1),
            );
        let tip = m * skel.rest_position(2).push(1.0);
        assert!((fk.joint_positions[2] - tip.xyz()).norm() < 1e-14);
    }

    #[test]
    fn rejects_bad_hierarchies() {
        assert!(Skeleton::new(vec![]).is_err());
        assert!(Skeleton::new(vec![joint("a", None, [0.0; 3]), joint("b", None, [1.0, 0.0, 0.0])]).is_err());
        assert!(Skeleton::new(vec![
            joint("a", None, [0.0; 3]),
            joint("b", Some(2), [1.0, 0.0, 0.0]),
            joint("c", Some(0), [2.0, 0.0, 0.0])
        ])
        .is_err());
        assert!(Skeleton::new(vec![joint("a", None, [0.0; 3]), joint("b", Some(0), [0.0; 3])]).is_err());
    }

    #[test]
    fn pose_validation() {
        let skel = chain();
        assert!(forward_kinematics(&skel, &PoseFrame::identity(2)).is_err());
        assert!(PoseFrame::from_wxyz(&[[0.0; 4]], [0.0; 3]).is_err());
        let p = PoseFrame::from_wxyz(&[[2.0, 0.0, 0.0, 0.0]], [0.0; 3]).unwrap();
        assert!((p.rotations[0].quaternion().norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rig_json_round_trip() {
        let text = r#"{"joints":[{"name":"r","parent":null,"rest":[0,0,0]},{"name":"c","parent":0,"rest":[1,0,0]}],
                       "frames":[{"root_translation":[0,0,1],"rotations":[[1,0,0,0],[0.7071067811865476,0,0,0.7071067811865476]]}]}"#;
        let rig: RigFile = serde_json::from_str(text).unwrap();
        let skel = rig.skeleton().unwrap();
        assert_eq!(skel.n_bones(), 1);
        let poses = rig.poses().unwrap();
        assert_eq!(poses[0].root_translation, Vector3::new(0.0, 0.0, 1.0));
    }
}
