use std::sync::{Arc, OnceLock};

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::linalg::LltError;
use faer::sparse::{SparseColMatRef, SymbolicSparseColMat};
use faer::{Mat, Side};
use nalgebra::{DMatrix, SMatrix};

use super::constraints::ConstraintSystem;
use super::rotation::RotationBlocks;
use crate::error::{Error, Result};
use crate::geometry::DefGradOperator;
use crate::materials::StrainEnergy;

/// Relative residual above which the solve applies iterative refinement.
pub const TARGET_RELATIVE_RESIDUAL: f64 = 1e-10;
const MAX_REFINEMENT_STEPS: usize = 3;

/// Upper-triangular CSC pattern of the condensed `3n × 3n` operator and the
/// scatter tables that place element and pin contributions into it. Depends
/// only on mesh connectivity, so one pattern (and one symbolic
/// factorization) serves every frame.
#[derive(Debug)]
pub struct SystemPattern {
    dim: usize,
    symbolic: SymbolicSparseColMat<usize>,
    /// Value slot for local entry `(a, b)` at index `12 a + b`, or `u32::MAX`
    /// when the entry lies in the lower triangle.
    element_slots: Vec<[u32; 144]>,
    diag_slots: Vec<usize>,
    llt: OnceLock<std::result::Result<SymbolicLlt<usize>, String>>,
}

impl SystemPattern {
    pub fn new(defgrad: &DefGradOperator) -> Self {
        let n = defgrad.n_vertices();
        let dim = 3 * n;
        let mut adjacency: Vec<Vec<usize>> = (0..n).map(|v| vec![v]).collect();
        for k in 0..defgrad.n_elements() {
            let t = defgrad.tet(k);
            for &a in &t {
                for &b in &t {
                    adjacency[a].push(b);
                }
            }
        }
        for adj in adjacency.iter_mut() {
            adj.sort_unstable();
            adj.dedup();
        }

        let mut col_ptr = Vec::with_capacity(dim + 1);
        let mut row_idx = Vec::new();
        col_ptr.push(0usize);
        for col in 0..dim {
            let v = col / 3;
            for &u in &adjacency[v] {
                for c in 0..3 {
                    let row = 3 * u + c;
                    if row <= col {
                        row_idx.push(row);
                    }
                }
            }
            col_ptr.push(row_idx.len());
        }

        let slot = |row: usize, col: usize| -> usize {
            let (start, end) = (col_ptr[col], col_ptr[col + 1]);
            start + row_idx[start..end].binary_search(&row).expect("entry in pattern")
        };
        let element_slots = (0..defgrad.n_elements())
            .map(|k| {
                let dofs = defgrad.dofs(k);
                let mut slots = [u32::MAX; 144];
                for a in 0..12 {
                    for b in 0..12 {
                        if dofs[a] <= dofs[b] {
                            slots[12 * a + b] = slot(dofs[a], dofs[b]) as u32;
                        }
                    }
                }
                slots
            })
            .collect();
        let diag_slots = (0..dim).map(|d| slot(d, d)).collect();
        let symbolic = SymbolicSparseColMat::new_checked(dim, dim, col_ptr, None, row_idx);
        SystemPattern {
            dim,
            symbolic,
            element_slots,
            diag_slots,
            llt: OnceLock::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.symbolic.row_idx().len()
    }

    /// Symbolic Cholesky analysis, computed on first use and then shared.
    pub fn symbolic_llt(&self) -> Result<SymbolicLlt<usize>> {
        self.llt
            .get_or_init(|| SymbolicLlt::try_new(self.symbolic.as_ref(), Side::Upper).map_err(|e| format!("{e:?}")))
            .clone()
            .map_err(Error::SingularSystem)
    }

    pub fn has_symbolic_factorization(&self) -> bool {
        matches!(self.llt.get(), Some(Ok(_)))
    }
}

/// `A = H_x + (R⁺B)ᵀ H_s (R⁺B)` and `b = k_s Pᵀx_p + f + (R⁺B)ᵀ(H_s s_lin - g_s)`.
///
/// `A` depends on the pose through `[R]`, so values are rebuilt every frame
/// while the pattern is reused.
#[derive(Debug, Clone)]
pub struct CondensedSystem {
    pattern: Arc<SystemPattern>,
    values: Vec<f64>,
    rhs: Vec<f64>,
}

pub fn assemble_condensed(
    pattern: &Arc<SystemPattern>,
    defgrad: &DefGradOperator,
    rotations: &RotationBlocks,
    energy: &StrainEnergy,
    constraints: &ConstraintSystem,
) -> Result<CondensedSystem> {
    let m = defgrad.n_elements();
    let dim = pattern.dim;
    if rotations.n_elements() != m || energy.n_elements() != m || constraints.n_dofs() != dim {
        return Err(Error::Dimension(format!(
            "elements: defgrad {m}, rotations {}, energy {}; dofs: pattern {dim}, constraints {}",
            rotations.n_elements(),
            energy.n_elements(),
            constraints.n_dofs()
        )));
    }
    if constraints.pinned.is_empty() && !constraints.has_load() {
        return Err(Error::SingularSystem("no pinned vertices and no external load".into()));
    }

    let mut values = vec![0.0; pattern.nnz()];
    let mut rhs = constraints.rhs();
    for k in 0..m {
        let g: SMatrix<f64, 6, 12> = rotations.pinv(k) * defgrad.block(k);
        let e = &energy.blocks[k];
        let hg = e.hessian * g;
        let local = g.transpose() * hg;
        let slots = &pattern.element_slots[k];
        for (idx, &slot) in slots.iter().enumerate() {
            if slot != u32::MAX {
                values[slot as usize] += local[(idx / 12, idx % 12)];
            }
        }
        let local_rhs = g.transpose() * e.affine_rhs();
        for (c, &d) in defgrad.dofs(k).iter().enumerate() {
            rhs[d] += local_rhs[c];
        }
    }
    for &i in &constraints.pinned {
        for c in 0..3 {
            values[pattern.diag_slots[3 * i + c]] += constraints.stiffness;
        }
    }
    Ok(CondensedSystem {
        pattern: Arc::clone(pattern),
        values,
        rhs,
    })
}

/// Numeric Cholesky factor of a [`CondensedSystem`].
pub struct FactoredSystem<'a> {
    system: &'a CondensedSystem,
    llt: Llt<usize, f64>,
}

#[derive(Debug, Clone)]
pub struct SolveOutput {
    pub x: Vec<f64>,
    /// `|A x - b| / |b|` in the 2-norm.
    pub relative_residual: f64,
    pub refinement_steps: usize,
}

impl CondensedSystem {
    pub fn dim(&self) -> usize {
        self.pattern.dim
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn pattern(&self) -> &Arc<SystemPattern> {
        &self.pattern
    }

    fn matrix(&self) -> SparseColMatRef<'_, usize, f64> {
        SparseColMatRef::new(self.pattern.symbolic.as_ref(), &self.values)
    }

    /// `A x` using the symmetric upper storage.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let sym = self.pattern.symbolic.as_ref();
        let (col_ptr, row_idx) = (sym.col_ptr(), sym.row_idx());
        let mut y = vec![0.0; self.dim()];
        for col in 0..self.dim() {
            for p in col_ptr[col]..col_ptr[col + 1] {
                let row = row_idx[p];
                let v = self.values[p];
                y[row] += v * x[col];
                if row != col {
                    y[col] += v * x[row];
                }
            }
        }
        y
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let sym = self.pattern.symbolic.as_ref();
        let mut a = DMatrix::zeros(self.dim(), self.dim());
        for col in 0..self.dim() {
            for p in sym.col_ptr()[col]..sym.col_ptr()[col + 1] {
                let row = sym.row_idx()[p];
                a[(row, col)] = self.values[p];
                a[(col, row)] = self.values[p];
            }
        }
        a
    }

    pub fn factor(&self) -> Result<FactoredSystem<'_>> {
        let symbolic = self.pattern.symbolic_llt()?;
        match Llt::try_new_with_symbolic(symbolic, self.matrix(), Side::Upper) {
            Ok(llt) => Ok(FactoredSystem { system: self, llt }),
            Err(LltError::Numeric(faer::linalg::cholesky::llt::factor::LltError::NonPositivePivot { index })) => {
                Err(Error::Factorization {
                    pivot: index,
                    dim: self.dim(),
                })
            }
            Err(e) => Err(Error::SingularSystem(format!("{e:?}"))),
        }
    }

    /// Factor and solve in one step.
    pub fn solve(&self) -> Result<SolveOutput> {
        self.factor()?.solve()
    }

    fn relative_residual(&self, x: &[f64]) -> (Vec<f64>, f64) {
        let ax = self.apply(x);
        let r: Vec<f64> = self.rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let bn = norm2(&self.rhs);
        let rel = if bn > 0.0 { norm2(&r) / bn } else { norm2(&r) };
        (r, rel)
    }
}

impl FactoredSystem<'_> {
    fn solve_vec(&self, b: &[f64]) -> Vec<f64> {
        let mut rhs = Mat::from_fn(b.len(), 1, |i, _| b[i]);
        self.llt.solve_in_place(rhs.as_mut());
        (0..b.len()).map(|i| rhs[(i, 0)]).collect()
    }

    pub fn solve(&self) -> Result<SolveOutput> {
        let system = self.system;
        let mut x = self.solve_vec(&system.rhs);
        let (mut r, mut rel) = system.relative_residual(&x);
        let mut steps = 0;
        while rel > TARGET_RELATIVE_RESIDUAL && steps < MAX_REFINEMENT_STEPS && rel.is_finite() {
            let dx = self.solve_vec(&r);
            for (xi, d) in x.iter_mut().zip(&dx) {
                *xi += d;
            }
            (r, rel) = system.relative_residual(&x);
            steps += 1;
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::SingularSystem("solve produced non-finite values".into()));
        }
        Ok(SolveOutput {
            x,
            relative_residual: rel,
            refinement_steps: steps,
        })
    }
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
