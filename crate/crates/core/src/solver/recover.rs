use nalgebra::Vector6;

use super::constraints::ConstraintSystem;
use super::rotation::RotationBlocks;
use crate::flatten::Vector9;
use crate::geometry::DefGradOperator;
use crate::materials::{StrainEnergy, SymVec, FROBENIUS_WEIGHTS};

/// Strain and multipliers recovered from a condensed solve.
#[derive(Debug, Clone)]
pub struct Recovered {
    pub s: Vec<SymVec>,
    /// Per-unit-volume multipliers, 9 per element.
    pub lambda: Vec<f64>,
    /// `|B x - [R] s|_∞`. Nonzero wherever an element's deformation gradient
    /// is not a rotation of its cluster times a symmetric stretch.
    pub constraint_residual: f64,
}

/// `s_k = [R_k]⁺ B_k x` and `w_k λ_k = ([R_k]⁺)ᵀ (H_k (s_k - s_lin) + g_k)`.
pub fn recover_multipliers_and_strain(
    x: &[f64],
    volumes: &[f64],
    defgrad: &DefGradOperator,
    rotations: &RotationBlocks,
    energy: &StrainEnergy,
) -> Recovered {
    let m = defgrad.n_elements();
    let mut s = Vec::with_capacity(m);
    let mut lambda = Vec::with_capacity(9 * m);
    let mut constraint_residual: f64 = 0.0;
    for k in 0..m {
        let f: Vector9 = defgrad.element_apply(k, x);
        let sk = SymVec(rotations.pinv(k) * f);
        let e = &energy.blocks[k];
        let stress: Vector6<f64> = e.hessian * (sk.0 - e.linearization.0) + e.gradient;
        let weighted = Vector6::from_fn(|i, _| stress[i] / FROBENIUS_WEIGHTS[i]);
        let lk: Vector9 = rotations.block(k) * weighted / volumes[k];
        lambda.extend_from_slice(lk.as_slice());
        let gap = f - rotations.block(k) * sk.0;
        constraint_residual = constraint_residual.max(gap.amax());
        s.push(sk);
    }
    Recovered {
        s,
        lambda,
        constraint_residual,
    }
}

/// ∞-norms of the Lagrangian gradient blocks at `(s, x, λ)` for
/// `L = Σ w_k [Ψ(s_k) + λ_kᵀ(B_k x - [R_k] s_k)] + C(x) - fᵀx`.
///
/// The multiplier block is measured on the range of `[R]` (the admissible
/// multiplier space), i.e. `w_k [R_k]ᵀ(B_k x - [R_k] s_k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagrangianResiduals {
    pub strain: f64,
    pub position: f64,
    pub multiplier: f64,
}

impl LagrangianResiduals {
    pub fn max(&self) -> f64 {
        self.strain.max(self.position).max(self.multiplier)
    }
}

#[allow(clippy::too_many_arguments)]
pub fn lagrangian_residuals(
    x: &[f64],
    s: &[SymVec],
    lambda: &[f64],
    volumes: &[f64],
    defgrad: &DefGradOperator,
    rotations: &RotationBlocks,
    energy: &StrainEnergy,
    constraints: &ConstraintSystem,
) -> LagrangianResiduals {
    let m = defgrad.n_elements();
    let mut strain: f64 = 0.0;
    let mut multiplier: f64 = 0.0;
    let mut weighted_lambda = vec![0.0; 9 * m];
    for k in 0..m {
        let w = volumes[k];
        let lk = Vector9::from_column_slice(&lambda[9 * k..9 * k + 9]);
        let e = &energy.blocks[k];
        let block = rotations.block(k);
        let rs = e.hessian * (s[k].0 - e.linearization.0) + e.gradient - w * block.transpose() * lk;
        strain = strain.max(rs.amax());
        let gap = defgrad.element_apply(k, x) - block * s[k].0;
        multiplier = multiplier.max((w * block.transpose() * gap).amax());
        for i in 0..9 {
            weighted_lambda[9 * k + i] = w * lk[i];
        }
    }
    let bt_lambda = defgrad.apply_transpose(&weighted_lambda);
    let grad_c = constraints.gradient(x);
    let position = bt_lambda
        .iter()
        .zip(&grad_c)
        .map(|(a, b)| (a + b).abs())
        .fold(0.0, f64::max);
    LagrangianResiduals {
        strain,
        position,
        multiplier,
    }
}
