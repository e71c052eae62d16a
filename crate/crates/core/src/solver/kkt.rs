//! Uncondensed saddle-point system over `(s, x, λ)`, solved directly.
//! Serves as the reference for the condensed path.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use nalgebra::{DMatrix, DVector, SMatrix};

use super::constraints::ConstraintSystem;
use super::rotation::RotationBlocks;
use crate::error::{Error, Result};
use crate::geometry::DefGradOperator;
use crate::materials::{StrainEnergy, SymVec};

/// Systems up to this many unknowns are solved with dense LU.
pub const DENSE_LIMIT: usize = 2_000;
/// Default cap on total unknowns for the reference solve.
pub const DEFAULT_ORACLE_LIMIT: usize = 20_000;

/// Block layout, unknowns ordered `[s (6m); x (3n); λ̂ (9m)]` with
/// `λ̂_k = w_k λ_k`:
///
/// ```text
/// [ H_s    0       -[R]ᵀ    ] [s]   [H_s s_lin - g_s]
/// [ 0      H_x     (ΠB)ᵀ    ] [x] = [k_s Pᵀx_p + f  ]
/// [ -[R]   ΠB     -(I - Π)  ] [λ̂]   [0              ]
/// ```
///
/// `Π` is the block-diagonal projector onto the range of `[R]`. The
/// constraint `B x = [R] s` has 9 rows per element but only 6 free strain
/// entries, so on meshes with more elements than vertices it cannot hold
/// exactly; the projection enforces its least-squares form and the corner
/// block pins multiplier components outside the range of `[R]` to zero.
#[derive(Debug, Clone)]
pub struct KktSystem {
    pub n_elements: usize,
    pub n_dofs: usize,
    pub triplets: Vec<(usize, usize, f64)>,
    pub rhs: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct KktSolution {
    pub s: Vec<SymVec>,
    pub x: Vec<f64>,
    /// Per-unit-volume multipliers, 9 per element.
    pub lambda: Vec<f64>,
}

impl KktSystem {
    pub fn build(
        volumes: &[f64],
        defgrad: &DefGradOperator,
        rotations: &RotationBlocks,
        energy: &StrainEnergy,
        constraints: &ConstraintSystem,
    ) -> Result<Self> {
        let m = defgrad.n_elements();
        let nd = 3 * defgrad.n_vertices();
        if rotations.n_elements() != m || energy.n_elements() != m || volumes.len() != m || constraints.n_dofs() != nd {
            return Err(Error::Dimension(
                "KKT blocks disagree on element or vertex counts".into(),
            ));
        }
        let (off_x, off_l) = (6 * m, 6 * m + nd);
        let mut t = Vec::with_capacity(m * (36 + 2 * 54 + 2 * 108 + 81) + nd);
        let mut rhs = vec![0.0; off_l + 9 * m];

        for k in 0..m {
            let e = &energy.blocks[k];
            for i in 0..6 {
                for j in 0..6 {
                    if e.hessian[(i, j)] != 0.0 {
                        t.push((6 * k + i, 6 * k + j, e.hessian[(i, j)]));
                    }
                }
            }
            let affine = e.affine_rhs();
            rhs[6 * k..6 * k + 6].copy_from_slice(affine.as_slice());

            let r = rotations.block(k);
            for a in 0..9 {
                for b in 0..6 {
                    let v = r[(a, b)];
                    if v != 0.0 {
                        t.push((6 * k + b, off_l + 9 * k + a, -v));
                        t.push((off_l + 9 * k + a, 6 * k + b, -v));
                    }
                }
            }

            let proj = rotations.range_projector(k);
            let pb: SMatrix<f64, 9, 12> = proj * defgrad.block(k);
            let dofs = defgrad.dofs(k);
            for a in 0..9 {
                for (c, &d) in dofs.iter().enumerate() {
                    let v = pb[(a, c)];
                    if v != 0.0 {
                        t.push((off_x + d, off_l + 9 * k + a, v));
                        t.push((off_l + 9 * k + a, off_x + d, v));
                    }
                }
                for b in 0..9 {
                    let v = proj[(a, b)] - if a == b { 1.0 } else { 0.0 };
                    if v != 0.0 {
                        t.push((off_l + 9 * k + a, off_l + 9 * k + b, v));
                    }
                }
            }
        }
        for &i in &constraints.pinned {
            for c in 0..3 {
                t.push((off_x + 3 * i + c, off_x + 3 * i + c, constraints.stiffness));
            }
        }
        rhs[off_x..off_l].copy_from_slice(&constraints.rhs());

        Ok(KktSystem {
            n_elements: m,
            n_dofs: nd,
            triplets: t,
            rhs,
        })
    }

    pub fn dim(&self) -> usize {
        15 * self.n_elements + self.n_dofs
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut a = DMatrix::zeros(n, n);
        for &(r, c, v) in &self.triplets {
            a[(r, c)] += v;
        }
        a
    }

    fn split(&self, sol: &[f64], volumes: &[f64]) -> KktSolution {
        let m = self.n_elements;
        let off_l = 6 * m + self.n_dofs;
        let s = (0..m)
            .map(|k| SymVec(nalgebra::Vector6::from_column_slice(&sol[6 * k..6 * k + 6])))
            .collect();
        let x = sol[6 * m..off_l].to_vec();
        let lambda = (0..9 * m).map(|i| sol[off_l + i] / volumes[i / 9]).collect();
        KktSolution { s, x, lambda }
    }

    /// Direct solve: dense LU up to [`DENSE_LIMIT`] unknowns, sparse LU up
    /// to `limit`.
    pub fn solve(&self, volumes: &[f64], limit: usize) -> Result<KktSolution> {
        let n = self.dim();
        if n > limit {
            return Err(Error::Dimension(format!(
                "KKT system has {n} unknowns, limit is {limit}"
            )));
        }
        let sol: Vec<f64> = if n <= DENSE_LIMIT {
            let lu = self.to_dense().lu();
            let b = DVector::from_column_slice(&self.rhs);
            lu.solve(&b)
                .ok_or_else(|| Error::SingularSystem("KKT matrix is singular".into()))?
                .as_slice()
                .to_vec()
        } else {
            let entries: Vec<Triplet<usize, usize, f64>> =
                self.triplets.iter().map(|&(r, c, v)| Triplet::new(r, c, v)).collect();
            let a = SparseColMat::try_new_from_triplets(n, n, &entries)
                .map_err(|e| Error::SingularSystem(format!("{e:?}")))?;
            let lu = a
                .sp_lu()
                .map_err(|e| Error::SingularSystem(format!("KKT factorization failed: {e:?}")))?;
            let mut b = Mat::from_fn(n, 1, |i, _| self.rhs[i]);
            lu.solve_in_place(b.as_mut());
            (0..n).map(|i| b[(i, 0)]).collect()
        };
        if !sol.iter().all(|v| v.is_finite()) {
            return Err(Error::SingularSystem("KKT matrix is singular".into()));
        }
        Ok(self.split(&sol, volumes))
    }
}

pub fn solve_full_kkt(
    volumes: &[f64],
    defgrad: &DefGradOperator,
    rotations: &RotationBlocks,
    energy: &StrainEnergy,
    constraints: &ConstraintSystem,
    limit: usize,
) -> Result<KktSolution> {
    KktSystem::build(volumes, defgrad, rotations, energy, constraints)?.solve(volumes, limit)
}
