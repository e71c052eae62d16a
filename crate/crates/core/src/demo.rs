//! Procedural beam scene: a hex grid split into tetrahedra with a
//! three-joint skeleton along its centerline.

use std::path::Path;

use nalgebra::{UnitQuaternion, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{medit, TetMesh};
use crate::materials::MaterialConfig;
use crate::rig::{FrameSpec, Joint, PoseFrame, RigFile, Skeleton};

/// Beam along +x starting at the origin, with cross-section `[0, size.y] × [0, size.z]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamSpec {
    pub cells: [usize; 3],
    pub size: [f64; 3],
}

impl Default for BeamSpec {
    /// 8×2×2 cells, 192 tets.
    fn default() -> Self {
        BeamSpec {
            cells: [8, 2, 2],
            size: [4.0, 1.0, 1.0],
        }
    }
}

impl BeamSpec {
    pub fn new(cells: [usize; 3], size: [f64; 3]) -> Self {
        BeamSpec { cells, size }
    }

    /// Roughly 11.5k tets.
    pub fn large() -> Self {
        BeamSpec {
            cells: [30, 8, 8],
            size: [7.5, 2.0, 2.0],
        }
    }

    pub fn n_tets(&self) -> usize {
        6 * self.cells.iter().product::<usize>()
    }

    pub fn n_vertices(&self) -> usize {
        self.cells.iter().map(|c| c + 1).product()
    }

    pub fn build(&self) -> Result<(TetMesh, Skeleton)> {
        Ok((self.mesh()?, self.skeleton()?))
    }

    pub fn mesh(&self) -> Result<TetMesh> {
        let [nx, ny, nz] = self.cells;
        if nx == 0 || ny == 0 || nz == 0 || !self.size.iter().all(|s| *s > 0.0 && s.is_finite()) {
            return Err(Error::Config(format!("invalid beam spec {self:?}")));
        }
        let h = [
            self.size[0] / nx as f64,
            self.size[1] / ny as f64,
            self.size[2] / nz as f64,
        ];
        let index = |i: usize, j: usize, k: usize| (i * (ny + 1) + j) * (nz + 1) + k;
        let mut vertices = Vec::with_capacity(self.n_vertices());
        for i in 0..=nx {
            for j in 0..=ny {
                for k in 0..=nz {
                    vertices.push(Vector3::new(i as f64 * h[0], j as f64 * h[1], k as f64 * h[2]));
                }
            }
        }
        // Each cube is cut along its main diagonal into six tets, one per
        // axis ordering; the split is conforming across neighbouring cubes.
        const ORDERS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let mut tets = Vec::with_capacity(self.n_tets());
        for i in 0..nx {
            for j in 0..ny {
                for k in 0..nz {
                    for order in ORDERS {
                        let mut c = [i, j, k];
                        let mut tet = [index(i, j, k); 4];
                        for (step, &axis) in order.iter().enumerate() {
                            c[axis] += 1;
                            tet[step + 1] = index(c[0], c[1], c[2]);
                        }
                        tets.push(tet);
                    }
                }
            }
        }
        TetMesh::new(vertices, tets)
    }

    /// Joints at both ends and the middle of the centerline.
    pub fn joints(&self) -> Vec<Joint> {
        let (y, z) = (0.5 * self.size[1], 0.5 * self.size[2]);
        let x = [0.0, 0.5 * self.size[0], self.size[0]];
        ["root", "middle", "tip"]
            .iter()
            .enumerate()
            .map(|(i, name)| Joint {
                name: name.to_string(),
                parent: i.checked_sub(1),
                rest: [x[i], y, z],
            })
            .collect()
    }

    pub fn skeleton(&self) -> Result<Skeleton> {
        Skeleton::new(self.joints())
    }

    /// Tets whose barycenter lies within `depth` of a side face (the four
    /// faces parallel to the beam axis). The rest form the core.
    pub fn shell_elements(&self, mesh: &TetMesh, depth: f64) -> Vec<usize> {
        (0..mesh.n_tets())
            .filter(|&k| {
                let c = mesh.barycenter(k);
                let d = c.y.min(self.size[1] - c.y).min(c.z).min(self.size[2] - c.z);
                d < depth
            })
            .collect()
    }
}

/// The middle joint rotated by `angle` radians about +z.
pub fn bend_pose(angle: f64) -> PoseFrame {
    let mut pose = PoseFrame::identity(3);
    pose.rotations[1] = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), angle);
    pose
}

/// `frames` poses sweeping the middle joint from 0 to `max_angle`.
pub fn bend_animation(frames: usize, max_angle: f64) -> Vec<PoseFrame> {
    match frames {
        0 => Vec::new(),
        1 => vec![bend_pose(max_angle)],
        n => (0..n)
            .map(|f| bend_pose(max_angle * f as f64 / (n - 1) as f64))
            .collect(),
    }
}

/// Default sweep: 11 frames up to 100 degrees.
pub fn default_animation() -> Vec<PoseFrame> {
    bend_animation(11, 100f64.to_radians())
}

/// Writes `beam.mesh`, `rig.json` and `material.json` into `dir`.
pub fn write_demo_assets(dir: &Path, spec: &BeamSpec, poses: &[PoseFrame]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mesh = spec.mesh()?;
    std::fs::write(
        dir.join("beam.mesh"),
        medit::to_medit_string(mesh.vertices(), mesh.tets()),
    )?;
    let rig = RigFile {
        joints: spec.joints(),
        frames: poses.iter().map(FrameSpec::from_pose).collect(),
    };
    std::fs::write(dir.join("rig.json"), serde_json::to_string_pretty(&rig)?)?;
    std::fs::write(
        dir.join("material.json"),
        serde_json::to_string_pretty(&MaterialConfig::default())?,
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DefGradOperator;

    #[test]
    fn counts_and_volume() {
        let spec = BeamSpec::default();
        let (mesh, skel) = spec.build().unwrap();
        assert_eq!(mesh.n_tets(), 192);
        assert_eq!(mesh.n_vertices(), 81);
        assert!((mesh.total_volume() - 4.0).abs() < 1e-12);
        assert_eq!(skel.n_joints(), 3);
        assert_eq!(skel.n_bones(), 2);
        // closed box surface: 2 triangles per boundary cell face
        assert_eq!(mesh.surface_faces().len(), 2 * 2 * (8 * 2 + 8 * 2 + 2 * 2));
    }

    #[test]
    fn split_is_conforming() {
        // every interior face is shared by exactly two tets, so the surface
        // encloses the full box volume and the divergence check holds
        let (mesh, _) = BeamSpec::new([3, 2, 2], [1.5, 1.0, 1.0]).build().unwrap();
        let x = mesh.rest_positions();
        let mut flux = 0.0;
        for f in mesh.surface_faces() {
            let p = |i: usize| Vector3::new(x[3 * i], x[3 * i + 1], x[3 * i + 2]);
            flux += p(f[0]).dot(&p(f[1]).cross(&p(f[2]))) / 6.0;
        }
        assert!((flux - 1.5).abs() < 1e-12);
        assert!(DefGradOperator::new(&mesh).is_ok());
    }

    #[test]
    fn shell_and_core_partition() {
        let spec = BeamSpec::new([4, 4, 4], [2.0, 2.0, 2.0]);
        let mesh = spec.mesh().unwrap();
        let shell = spec.shell_elements(&mesh, 0.5);
        // the inner 2×2 column of cubes is core
        assert_eq!(shell.len(), mesh.n_tets() - 6 * 4 * 4);
    }

    #[test]
    fn large_beam_count() {
        let spec = BeamSpec::large();
        assert_eq!(spec.n_tets(), 11_520);
    }

    #[test]
    fn animation_sweeps_to_max() {
        let poses = bend_animation(5, 1.0);
        assert_eq!(poses.len(), 5);
        assert_eq!(poses[0], PoseFrame::identity(3));
        assert!((poses[4].rotations[1].angle() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn assets_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let spec = BeamSpec::default();
        write_demo_assets(dir.path(), &spec, &bend_animation(3, 0.5)).unwrap();
        let mesh = TetMesh::load(dir.path().join("beam.mesh")).unwrap();
        assert_eq!(mesh.n_tets(), spec.n_tets());
        let rig = RigFile::load(dir.path().join("rig.json")).unwrap();
        assert_eq!(rig.poses().unwrap().len(), 3);
        MaterialConfig::load(dir.path().join("material.json")).unwrap();
    }
}
