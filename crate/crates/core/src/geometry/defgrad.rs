use nalgebra::{Matrix3, SMatrix, SVector};

use super::mesh::edge_matrix;
use super::TetMesh;
use crate::error::{Error, Result};
use crate::flatten::Vector9;

/// Per-element map from the 12 stacked corner coordinates
/// `[x0 y0 z0 x1 ... z3]` to the row-major flattened deformation gradient.
pub type ElementDefGrad = SMatrix<f64, 9, 12>;
pub type Vector12 = SVector<f64, 12>;

/// The discrete deformation-gradient operator `F = B x`.
///
/// Built once from rest positions: `F_k = Ds_k Dm_k^{-1}` where `Ds_k` and
/// `Dm_k` hold the current and rest edge vectors of tet `k` as columns.
#[derive(Debug, Clone)]
pub struct DefGradOperator {
    blocks: Vec<ElementDefGrad>,
    tets: Vec<[usize; 4]>,
    n_vertices: usize,
}

impl DefGradOperator {
    pub fn new(mesh: &TetMesh) -> Result<Self> {
        let vertices = mesh.vertices();
        let mut blocks = Vec::with_capacity(mesh.n_tets());
        let mut singular = Vec::new();
        for (k, t) in mesh.tets().iter().enumerate() {
            let dm = edge_matrix(t.map(|i| &vertices[i]));
            match dm.try_inverse() {
                Some(dm_inv) if dm_inv.iter().all(|v| v.is_finite()) => blocks.push(element_block(&dm_inv)),
                _ => {
                    singular.push(k);
                    blocks.push(ElementDefGrad::zeros());
                }
            }
        }
        if !singular.is_empty() {
            return Err(Error::DegenerateElements {
                tets: singular,
                threshold: 0.0,
            });
        }
        Ok(DefGradOperator {
            blocks,
            tets: mesh.tets().to_vec(),
            n_vertices: mesh.n_vertices(),
        })
    }

    pub fn n_elements(&self) -> usize {
        self.blocks.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn block(&self, k: usize) -> &ElementDefGrad {
        &self.blocks[k]
    }

    pub fn tet(&self, k: usize) -> [usize; 4] {
        self.tets[k]
    }

    /// Global degree-of-freedom indices matching the columns of `block(k)`.
    pub fn dofs(&self, k: usize) -> [usize; 12] {
        let t = self.tets[k];
        std::array::from_fn(|c| 3 * t[c / 3] + c % 3)
    }

    pub fn gather(&self, k: usize, x: &[f64]) -> Vector12 {
        let d = self.dofs(k);
        Vector12::from_fn(|c, _| x[d[c]])
    }

    pub fn element_apply(&self, k: usize, x: &[f64]) -> Vector9 {
        self.blocks[k] * self.gather(k, x)
    }

    pub fn deformation_gradient(&self, k: usize, x: &[f64]) -> Matrix3<f64> {
        crate::flatten::mat3(&self.element_apply(k, x))
    }

    /// `B x`, length `9m`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), 3 * self.n_vertices);
        let mut out = Vec::with_capacity(9 * self.blocks.len());
        for k in 0..self.blocks.len() {
            out.extend_from_slice(self.element_apply(k, x).as_slice());
        }
        out
    }

    /// `Bᵀ y` for `y` of length `9m`.
    pub fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), 9 * self.blocks.len());
        let mut out = vec![0.0; 3 * self.n_vertices];
        for (k, b) in self.blocks.iter().enumerate() {
            let yk = Vector9::from_column_slice(&y[9 * k..9 * k + 9]);
            let local = b.transpose() * yk;
            for (c, &d) in self.dofs(k).iter().enumerate() {
                out[d] += local[c];
            }
        }
        out
    }

    /// Nonzero entries of the global `9m × 3n` operator.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(36 * self.blocks.len());
        for (k, b) in self.blocks.iter().enumerate() {
            let dofs = self.dofs(k);
            for r in 0..9 {
                for (c, &d) in dofs.iter().enumerate() {
                    if b[(r, c)] != 0.0 {
                        out.push((9 * k + r, d, b[(r, c)]));
                    }
                }
            }
        }
        out
    }
}

/// `F_ij = sum_c (x_{c+1} - x_0)_i D_cj` with `D = Dm^{-1}`; row `3i + j`,
/// column `3a + i` for corner `a`.
fn element_block(dm_inv: &Matrix3<f64>) -> ElementDefGrad {
    let mut b = ElementDefGrad::zeros();
    for i in 0..3 {
        for j in 0..3 {
            let row = 3 * i + j;
            let mut corner0 = 0.0;
            for c in 0..3 {
                b[(row, 3 * (c + 1) + i)] = dm_inv[(c, j)];
                corner0 -= dm_inv[(c, j)];
            }
            b[(row, i)] = corner0;
        }
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flatten::vec9;
    use nalgebra::Vector3;

    fn skewed_tet() -> TetMesh {
        TetMesh::new(
            vec![
                Vector3::new(0.1, -0.2, 0.05),
                Vector3::new(1.3, 0.1, -0.2),
                Vector3::new(0.2, 0.9, 0.3),
                Vector3::new(-0.1, 0.2, 1.1),
            ],
            vec![[0, 1, 2, 3]],
        )
        .unwrap()
    }

    #[test]
    fn rest_gives_identity() {
        let mesh = skewed_tet();
        let b = DefGradOperator::new(&mesh).unwrap();
        let f = b.apply(&mesh.rest_positions());
        let id = vec9(&Matrix3::identity());
        for (a, e) in f.iter().zip(id.iter()) {
            assert!((a - e).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_scale() {
        let mesh = skewed_tet();
        let b = DefGradOperator::new(&mesh).unwrap();
        let x: Vec<f64> = mesh.rest_positions().iter().map(|v| 2.0 * v).collect();
        let f = b.deformation_gradient(0, &x);
        assert!((f - 2.0 * Matrix3::<f64>::identity()).abs().max() < 1e-12);
    }

    #[test]
    fn matches_direct_ds_dm_inverse() {
        let mesh = skewed_tet();
        let b = DefGradOperator::new(&mesh).unwrap();
        let x = [0.3, 0.1, -0.4, 1.0, 0.7, 0.2, -0.5, 1.2, 0.9, 0.4, -0.3, 1.6];
        let p = |i: usize| Vector3::new(x[3 * i], x[3 * i + 1], x[3 * i + 2]);
        let ds = Matrix3::from_columns(&[p(1) - p(0), p(2) - p(0), p(3) - p(0)]);
        let v = mesh.vertices();
        let dm = Matrix3::from_columns(&[v[1] - v[0], v[2] - v[0], v[3] - v[0]]);
        let direct = ds * dm.try_inverse().unwrap();
        assert!((b.deformation_gradient(0, &x) - direct).abs().max() < 1e-12);
    }

    #[test]
    fn transpose_is_adjoint() {
        let mesh = skewed_tet();
        let b = DefGradOperator::new(&mesh).unwrap();
        let x: Vec<f64> = (0..12).map(|i| (i as f64 * 0.37).sin()).collect();
        let y: Vec<f64> = (0..9).map(|i| (i as f64 * 1.1).cos()).collect();
        let bx = b.apply(&x);
        let bty = b.apply_transpose(&y);
        let lhs: f64 = bx.iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.iter().zip(&bty).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }
}
