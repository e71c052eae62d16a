use std::collections::HashMap;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

/// Elements whose rest volume falls below this fraction of the mean volume
/// are rejected.
pub const DEGENERACY_RATIO: f64 = 1e-12;

/// Linear tetrahedral mesh in its rest configuration.
///
/// Tetrahedra are stored positively oriented; `new` swaps two indices of any
/// element that arrives inverted.
#[derive(Debug, Clone)]
pub struct TetMesh {
    vertices: Vec<Vector3<f64>>,
    tets: Vec<[usize; 4]>,
    volumes: Vec<f64>,
    surface: Surface,
}

/// Boundary triangles (faces owned by exactly one tetrahedron), wound so
/// that normals point out of the volume.
#[derive(Debug, Clone, Default)]
pub struct Surface {
    /// Faces in mesh vertex indices.
    pub faces: Vec<[usize; 3]>,
    /// Sorted mesh indices of every vertex referenced by `faces`.
    pub vertices: Vec<usize>,
    /// Faces re-indexed into `vertices`.
    pub local_faces: Vec<[usize; 3]>,
}

/// Outward faces of a positively oriented tetrahedron, as local corners.
const TET_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 3, 2], [0, 1, 3], [0, 2, 1]];

pub(crate) fn edge_matrix(p: [&Vector3<f64>; 4]) -> Matrix3<f64> {
    Matrix3::from_columns(&[p[1] - p[0], p[2] - p[0], p[3] - p[0]])
}

impl TetMesh {
    pub fn new(vertices: Vec<Vector3<f64>>, mut tets: Vec<[usize; 4]>) -> Result<Self> {
        if tets.is_empty() {
            return Err(Error::InvalidMesh("mesh has no tetrahedra".into()));
        }
        let n = vertices.len();
        for (k, t) in tets.iter().enumerate() {
            if let Some(&bad) = t.iter().find(|&&i| i >= n) {
                return Err(Error::InvalidMesh(format!(
                    "tetrahedron {k} references vertex {bad}, mesh has {n}"
                )));
            }
        }
        if let Some(i) = vertices.iter().position(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidMesh(format!("vertex {i} is not finite")));
        }

        let mut volumes = Vec::with_capacity(tets.len());
        for t in tets.iter_mut() {
            let det = edge_matrix(t.map(|i| &vertices[i])).determinant();
            if det < 0.0 {
                t.swap(1, 2);
            }
            volumes.push(det.abs() / 6.0);
        }

        let mean = volumes.iter().sum::<f64>() / volumes.len() as f64;
        let threshold = DEGENERACY_RATIO * mean;
        let degenerate: Vec<usize> = volumes
            .iter()
            .enumerate()
            .filter(|(_, &v)| !(v >= threshold) || v == 0.0)
            .map(|(k, _)| k)
            .collect();
        if !degenerate.is_empty() {
            return Err(Error::DegenerateElements {
                tets: degenerate,
                threshold,
            });
        }

        let surface = Surface::extract(n, &tets);
        Ok(TetMesh {
            vertices,
            tets,
            volumes,
            surface,
        })
    }

    /// Reads a MEDIT `.mesh` file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let (vertices, tets) = super::medit::parse(&text, path)?;
        TetMesh::new(vertices, tets)
    }

    pub fn vertices(&self) -> &[Vector3<f64>] {
        &self.vertices
    }

    pub fn tets(&self) -> &[[usize; 4]] {
        &self.tets
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    pub fn surface(&self) -> &Surface {
        &self.surface
    }

    pub fn surface_faces(&self) -> &[[usize; 3]] {
        &self.surface.faces
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_tets(&self) -> usize {
        self.tets.len()
    }

    pub fn total_volume(&self) -> f64 {
        self.volumes.iter().sum()
    }

    /// Rest positions stacked as `[x0, y0, z0, x1, ...]`.
    pub fn rest_positions(&self) -> Vec<f64> {
        self.vertices.iter().flat_map(|v| [v.x, v.y, v.z]).collect()
    }

    pub fn barycenter(&self, k: usize) -> Vector3<f64> {
        let t = &self.tets[k];
        (self.vertices[t[0]] + self.vertices[t[1]] + self.vertices[t[2]] + self.vertices[t[3]]) / 4.0
    }

    /// Mean length of the boundary edges (each undirected edge counted once).
    pub fn mean_surface_edge_length(&self) -> f64 {
        let mut seen = std::collections::HashSet::new();
        let mut total = 0.0;
        for f in &self.surface.faces {
            for e in 0..3 {
                let (a, b) = (f[e], f[(e + 1) % 3]);
                if seen.insert((a.min(b), a.max(b))) {
                    total += (self.vertices[a] - self.vertices[b]).norm();
                }
            }
        }
        if seen.is_empty() {
            0.0
        } else {
            total / seen.len() as f64
        }
    }

    /// Gathers the surface vertices out of a stacked position vector.
    pub fn surface_positions(&self, positions: &[f64]) -> Vec<[f64; 3]> {
        self.surface
            .vertices
            .iter()
            .map(|&i| [positions[3 * i], positions[3 * i + 1], positions[3 * i + 2]])
            .collect()
    }
}

impl Surface {
    fn extract(n_vertices: usize, tets: &[[usize; 4]]) -> Surface {
        let key = |f: [usize; 3]| {
            let mut k = f;
            k.sort_unstable();
            k
        };
        let mut counts: HashMap<[usize; 3], u32> = HashMap::with_capacity(tets.len() * 2);
        for t in tets {
            for lf in TET_FACES {
                *counts.entry(key(lf.map(|c| t[c]))).or_insert(0) += 1;
            }
        }
        let mut faces = Vec::new();
        for t in tets {
            for lf in TET_FACES {
                let f = lf.map(|c| t[c]);
                if counts[&key(f)] == 1 {
                    faces.push(f);
                }
            }
        }

        let mut local = vec![usize::MAX; n_vertices];
        let mut used = vec![false; n_vertices];
        for f in &faces {
            for &i in f {
                used[i] = true;
            }
        }
        let vertices: Vec<usize> = (0..n_vertices).filter(|&i| used[i]).collect();
        for (li, &gi) in vertices.iter().enumerate() {
            local[gi] = li;
        }
        let local_faces = faces.iter().map(|f| f.map(|i| local[i])).collect();
        Surface {
            faces,
            vertices,
            local_faces,
        }
    }
}

/// Sum of signed tetrahedron volumes with vertices at `positions`.
pub fn mesh_volume(mesh: &TetMesh, positions: &[f64]) -> f64 {
    assert_eq!(positions.len(), 3 * mesh.n_vertices(), "positions must have length 3n");
    let p = |i: usize| Vector3::new(positions[3 * i], positions[3 * i + 1], positions[3 * i + 2]);
    mesh.tets
        .iter()
        .map(|t| {
            let c = t.map(p);
            edge_matrix([&c[0], &c[1], &c[2], &c[3]]).determinant() / 6.0
        })
        .sum()
}
