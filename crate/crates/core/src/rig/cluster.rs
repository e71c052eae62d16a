use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::Skeleton;
use crate::error::{Error, Result};
use crate::geometry::TetMesh;

/// Width of the near-tie band used by [`ClusterStrategy::Hierarchy`],
/// relative to the smallest bone distance.
pub const HIERARCHY_BAND: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClusterStrategy {
    /// Bone carried by the joint nearest to the tet barycenter.
    ClosestJoint,
    /// Bone segment nearest to the tet barycenter.
    ClosestBone,
    /// Among bones within the near-tie band of the closest, the deepest one.
    Hierarchy,
    /// Caller-supplied per-tet table.
    User,
}

impl FromStr for ClusterStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "joint" | "closest-joint" => Ok(ClusterStrategy::ClosestJoint),
            "bone" | "closest-bone" => Ok(ClusterStrategy::ClosestBone),
            "hierarchy" => Ok(ClusterStrategy::Hierarchy),
            "user" => Ok(ClusterStrategy::User),
            other => Err(Error::Config(format!("unknown clustering strategy `{other}`"))),
        }
    }
}

impl fmt::Display for ClusterStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClusterStrategy::ClosestJoint => "joint",
            ClusterStrategy::ClosestBone => "bone",
            ClusterStrategy::Hierarchy => "hierarchy",
            ClusterStrategy::User => "user",
        })
    }
}

/// Fixed tet-to-bone assignment; every tet in a cluster shares its bone's
/// rotation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RotationClustering {
    pub strategy: ClusterStrategy,
    pub assignment: Vec<usize>,
}

impl RotationClustering {
    pub fn bone_of(&self, tet: usize) -> usize {
        self.assignment[tet]
    }

    /// Number of tets per bone.
    pub fn cluster_sizes(&self, n_bones: usize) -> Vec<usize> {
        let mut sizes = vec![0; n_bones];
        for &b in &self.assignment {
            sizes[b] += 1;
        }
        sizes
    }
}

/// Index of the smallest value; exact ties go to the lowest index.
fn argmin(values: impl Iterator<Item = f64>) -> Option<(usize, f64)> {
    values.enumerate().fold(None, |best, (i, d)| match best {
        Some((_, bd)) if bd <= d => best,
        _ => Some((i, d)),
    })
}

fn closest_bone(skel: &Skeleton, p: &Vector3<f64>) -> usize {
    argmin(skel.bones().iter().map(|b| b.distance(p))).map_or(0, |(i, _)| i)
}

fn closest_joint_bone(skel: &Skeleton, p: &Vector3<f64>) -> usize {
    let (j, _) = argmin((0..skel.n_joints()).map(|j| (skel.rest_position(j) - p).norm())).expect("skeleton has joints");
    skel.joint_bone(j).expect("skeleton has bones")
}

fn hierarchy_bone(skel: &Skeleton, p: &Vector3<f64>) -> usize {
    let dist: Vec<f64> = skel.bones().iter().map(|b| b.distance(p)).collect();
    let min = dist.iter().copied().fold(f64::INFINITY, f64::min);
    let band = min * (1.0 + HIERARCHY_BAND);
    let mut best: Option<usize> = None;
    for (i, &d) in dist.iter().enumerate() {
        if d > band {
            continue;
        }
        match best {
            Some(b) if skel.bones()[b].depth >= skel.bones()[i].depth => {}
            _ => best = Some(i),
        }
    }
    best.unwrap_or(0)
}

pub fn cluster_rotations(
    mesh: &TetMesh,
    skel: &Skeleton,
    strategy: ClusterStrategy,
    user_table: Option<&[usize]>,
) -> Result<RotationClustering> {
    if skel.n_bones() == 0 {
        return Err(Error::Clustering("skeleton has no bones".into()));
    }
    let m = mesh.n_tets();
    let assignment = match strategy {
        ClusterStrategy::User => {
            let table =
                user_table.ok_or_else(|| Error::Clustering("user strategy requires an assignment table".into()))?;
            if table.len() != m {
                return Err(Error::Clustering(format!(
                    "assignment table covers {} tets, mesh has {m}",
                    table.len()
                )));
            }
            if let Some((k, &b)) = table.iter().enumerate().find(|(_, &b)| b >= skel.n_bones()) {
                return Err(Error::Clustering(format!(
                    "tet {k} assigned to bone {b}, skeleton has {}",
                    skel.n_bones()
                )));
            }
            table.to_vec()
        }
        _ => (0..m)
            .map(|k| {
                let c = mesh.barycenter(k);
                match strategy {
                    ClusterStrategy::ClosestBone => closest_bone(skel, &c),
                    ClusterStrategy::ClosestJoint => closest_joint_bone(skel, &c),
                    ClusterStrategy::Hierarchy => hierarchy_bone(skel, &c),
                    ClusterStrategy::User => unreachable!(),
                }
            })
            .collect(),
    };
    Ok(RotationClustering { strategy, assignment })
}

/// Reads a JSON array of per-tet bone indices.
pub fn load_user_table(path: impl AsRef<std::path::Path>) -> Result<Vec<usize>> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rig::Joint;

    fn j(name: &str, parent: Option<usize>, rest: [f64; 3]) -> Joint {
        Joint {
            name: name.into(),
            parent,
            rest,
        }
    }

    /// Small tets centred at the given points.
    fn tets_at(centres: &[[f64; 3]]) -> TetMesh {
        let mut v = Vec::new();
        let mut t = Vec::new();
        let h = 0.01;
        for c in centres {
            let c = Vector3::from(*c);
            let base = v.len();
            v.push(c + Vector3::new(-h, -h, -h));
            v.push(c + Vector3::new(3.0 * h, -h, -h));
            v.push(c + Vector3::new(-h, 3.0 * h, -h));
            v.push(c + Vector3::new(-h, -h, 3.0 * h));
            t.push([base, base + 1, base + 2, base + 3]);
        }
        TetMesh::new(v, t).unwrap()
    }

    fn line() -> Skeleton {
        Skeleton::new(vec![
            j("a", None, [0.0, 0.0, 0.0]),
            j("b", Some(0), [1.0, 0.0, 0.0]),
            j("c", Some(1), [2.0, 0.0, 0.0]),
        ])
        .unwrap()
    }

    #[test]
    fn single_bone_takes_everything() {
        let skel = Skeleton::new(vec![j("a", None, [0.0; 3]), j("b", Some(0), [1.0, 0.0, 0.0])]).unwrap();
        let mesh = tets_at(&[[0.2, 1.0, 0.0], [5.0, -3.0, 2.0]]);
        for s in [
            ClusterStrategy::ClosestBone,
            ClusterStrategy::ClosestJoint,
            ClusterStrategy::Hierarchy,
        ] {
            let c = cluster_rotations(&mesh, &skel, s, None).unwrap();
            assert_eq!(c.assignment, vec![0, 0]);
        }
    }

    #[test]
    fn collinear_bones_brute_force() {
        let skel = line();
        let pts = [[1.6, 0.3, 0.0], [0.4, -0.2, 0.1], [1.05, 0.5, 0.0]];
        let mesh = tets_at(&pts);
        let c = cluster_rotations(&mesh, &skel, ClusterStrategy::ClosestBone, None).unwrap();
        for k in 0..pts.len() {
            let p = mesh.barycenter(k);
            // Oracle: sample each segment densely.
            let sampled = |a: f64, b: f64| {
                (0..=10_000)
                    .map(|i| {
                        let t = a + (b - a) * i as f64 / 10_000.0;
                        (p - Vector3::new(t, 0.0, 0.0)).norm()
                    })
                    .fold(f64::INFINITY, f64::min)
            };
            let expected = if sampled(1.0, 2.0) < sampled(0.0, 1.0) { 1 } else { 0 };
            assert_eq!(c.assignment[k], expected, "tet {k}");
        }
        assert_eq!(c.assignment[0], 1);
    }

    #[test]
    fn exact_ties_go_to_lowest_index() {
        let skel = line();
        // Directly above the middle joint: equidistant from both bones.
        let mesh = tets_at(&[[1.0, 1.0, 0.0]]);
        let p = mesh.barycenter(0);
        let d0 = skel.bones()[0].distance(&p);
        let d1 = skel.bones()[1].distance(&p);
        let c = cluster_rotations(&mesh, &skel, ClusterStrategy::ClosestBone, None).unwrap();
        if d0 <= d1 {
            assert_eq!(c.assignment, vec![0]);
        }
    }

    #[test]
    fn hierarchy_prefers_deeper_bone_in_band() {
        let skel = line();
        // Slightly closer to bone 0, but within 5%: hierarchy picks bone 1.
        let mesh = tets_at(&[[0.99, 1.0, 0.0]]);
        let bone = cluster_rotations(&mesh, &skel, ClusterStrategy::ClosestBone, None).unwrap();
        let hier = cluster_rotations(&mesh, &skel, ClusterStrategy::Hierarchy, None).unwrap();
        assert_eq!(bone.assignment, vec![0]);
        assert_eq!(hier.assignment, vec![1]);
        // Far outside the band nothing changes.
        let far = tets_at(&[[0.2, 0.1, 0.0]]);
        assert_eq!(
            cluster_rotations(&far, &skel, ClusterStrategy::Hierarchy, None)
                .unwrap()
                .assignment,
            vec![0]
        );
    }

    #[test]
    fn closest_joint_uses_joint_bone() {
        let skel = line();
        let mesh = tets_at(&[[0.1, 0.0, 0.3], [0.9, 0.2, 0.0], [2.1, 0.0, 0.0]]);
        let c = cluster_rotations(&mesh, &skel, ClusterStrategy::ClosestJoint, None).unwrap();
        // Root carries bone 0, middle joint bone 1, leaf its incoming bone 1.
        assert_eq!(c.assignment, vec![0, 1, 1]);
    }

    #[test]
    fn user_table_validation() {
        let skel = line();
        let mesh = tets_at(&[[0.0; 3], [1.0, 0.0, 0.0]]);
        assert!(cluster_rotations(&mesh, &skel, ClusterStrategy::User, None).is_err());
        assert!(cluster_rotations(&mesh, &skel, ClusterStrategy::User, Some(&[0])).is_err());
        assert!(cluster_rotations(&mesh, &skel, ClusterStrategy::User, Some(&[0, 2])).is_err());
        let c = cluster_rotations(&mesh, &skel, ClusterStrategy::User, Some(&[1, 0])).unwrap();
        assert_eq!(c.assignment, vec![1, 0]);
    }

    #[test]
    fn boneless_skeleton_is_an_error() {
        let skel = Skeleton::new(vec![j("a", None, [0.0; 3])]).unwrap();
        let mesh = tets_at(&[[0.0; 3]]);
        assert!(cluster_rotations(&mesh, &skel, ClusterStrategy::ClosestBone, None).is_err());
    }

    #[test]
    fn strategy_parsing() {
        assert_eq!("bone".parse::<ClusterStrategy>().unwrap(), ClusterStrategy::ClosestBone);
        assert_eq!(
            "joint".parse::<ClusterStrategy>().unwrap(),
            ClusterStrategy::ClosestJoint
        );
        assert!("nearest".parse::<ClusterStrategy>().is_err());
    }
}
