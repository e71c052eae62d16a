//! Rotation blocks, the condensed SPD system and the saddle-point reference.
//!
//! With element rotations fixed by the rig, the mixed energy is quadratic in
//! `(s, x)`. Eliminating the strain and multipliers leaves
//!
//! ```text
//! (H_x + (R⁺B)ᵀ H_s (R⁺B)) x = k_s Pᵀx_p + f + (R⁺B)ᵀ (H_s s_lin - g_s)
//! ```
//!
//! one sparse SPD solve per pose.

mod condensed;
mod constraints;
mod kkt;
mod recover;
mod rotation;

pub use condensed::{
    assemble_condensed, CondensedSystem, FactoredSystem, SolveOutput, SystemPattern, TARGET_RELATIVE_RESIDUAL,
};
pub use constraints::{ConstraintSystem, VertexLoad};
pub use kkt::{solve_full_kkt, KktSolution, KktSystem, DEFAULT_ORACLE_LIMIT, DENSE_LIMIT};
pub use recover::{lagrangian_residuals, recover_multipliers_and_strain, LagrangianResiduals, Recovered};
pub use rotation::{
    batched_pinv, orthonormality_defect, rotation_block, rotation_pinv, RotationBlock, RotationBlocks, RotationPinv,
    ORTHONORMAL_TOLERANCE,
};

pub(crate) use condensed::norm2;

/// Factor and solve an assembled system; see [`CondensedSystem::solve`].
pub fn solve_frame(system: &CondensedSystem) -> crate::Result<SolveOutput> {
    system.solve()
}
