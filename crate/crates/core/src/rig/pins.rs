use nalgebra::Vector3;

use super::{BoneTransform, Skeleton, SkeletonPose};
use crate::error::{Error, Result};
use crate::geometry::TetMesh;

/// Multiplier on the mean surface edge length giving the default pin radius.
pub const DEFAULT_PIN_RADIUS_FACTOR: f64 = 1.5;

/// Vertices tied to bones by the penalty `k_s/2 |P x - x_p|^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PinSet {
    pub indices: Vec<usize>,
    pub bones: Vec<usize>,
    pub rest: Vec<Vector3<f64>>,
    pub stiffness: f64,
}

/// A point of the skeleton that attracts pins, with the bone whose motion
/// the pinned vertices follow.
#[derive(Debug, Clone, Copy)]
struct PinSite {
    position: Vector3<f64>,
    bone: usize,
}

fn pin_sites(skel: &Skeleton) -> Vec<PinSite> {
    let joints = (0..skel.n_joints()).filter_map(|j| {
        skel.joint_bone(j).map(|bone| PinSite {
            position: skel.rest_position(j),
            bone,
        })
    });
    let mids = skel.bones().iter().enumerate().map(|(bone, b)| PinSite {
        position: b.midpoint(),
        bone,
    });
    joints.chain(mids).collect()
}

pub fn default_pin_radius(mesh: &TetMesh) -> f64 {
    DEFAULT_PIN_RADIUS_FACTOR * mesh.mean_surface_edge_length()
}

impl PinSet {
    pub fn new(mesh: &TetMesh, indices: Vec<usize>, bones: Vec<usize>, stiffness: f64) -> Result<Self> {
        if !(stiffness > 0.0) || !stiffness.is_finite() {
            return Err(Error::Config(format!(
                "pin stiffness must be positive, got {stiffness}"
            )));
        }
        if indices.len() != bones.len() {
            return Err(Error::Dimension("one bone per pinned vertex required".into()));
        }
        let mut seen = vec![false; mesh.n_vertices()];
        for &i in &indices {
            if i >= mesh.n_vertices() || std::mem::replace(&mut seen[i], true) {
                return Err(Error::Config(format!("pin index {i} is out of range or repeated")));
            }
        }
        let rest = indices.iter().map(|&i| mesh.vertices()[i]).collect();
        Ok(PinSet {
            indices,
            bones,
            rest,
            stiffness,
        })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// `k_s/2 |P x - x_p|^2`.
    pub fn energy(&self, x: &[f64], targets: &[f64]) -> f64 {
        0.5 * self.stiffness * self.residuals(x, targets).iter().map(|r| r * r).sum::<f64>()
    }

    /// `P x - x_p`.
    pub fn residuals(&self, x: &[f64], targets: &[f64]) -> Vec<f64> {
        self.indices
            .iter()
            .enumerate()
            .flat_map(|(p, &i)| (0..3).map(move |c| x[3 * i + c] - targets[3 * p + c]))
            .collect()
    }
}

/// Pins every vertex within `radius` of a joint or bone midpoint; each pin
/// follows the bone of its closest site.
pub fn select_pins(mesh: &TetMesh, skel: &Skeleton, radius: f64, stiffness: f64) -> Result<PinSet> {
    if !(radius > 0.0) {
        return Err(Error::Config(format!("pin radius must be positive, got {radius}")));
    }
    let sites = pin_sites(skel);
    let mut indices = Vec::new();
    let mut bones = Vec::new();
    for (i, v) in mesh.vertices().iter().enumerate() {
        let mut best: Option<(f64, usize)> = None;
        for s in &sites {
            let d = (v - s.position).norm();
            if d <= radius && best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, s.bone));
            }
        }
        if let Some((_, bone)) = best {
            indices.push(i);
            bones.push(bone);
        }
    }
    if indices.is_empty() {
        return Err(Error::NoPins { radius });
    }
    for b in 0..skel.n_bones() {
        if !bones.contains(&b) {
            log::warn!("bone {b} has no pinned vertices at radius {radius}");
        }
    }
    PinSet::new(mesh, indices, bones, stiffness)
}

/// Rest positions of the pins carried by their bones' current motion.
pub fn pin_targets(pins: &PinSet, pose: &SkeletonPose) -> Vec<f64> {
    let mut out = Vec::with_capacity(3 * pins.len());
    for (rest, &bone) in pins.rest.iter().zip(&pins.bones) {
        let t: &BoneTransform = &pose.bones[bone];
        let p = t.apply(rest);
        out.extend_from_slice(&[p.x, p.y, p.z]);
    }
    out
}
