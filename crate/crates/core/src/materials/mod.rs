//! Strain energies over the symmetric stretch 6-vector.

mod model;
mod symvec;
mod table;

pub use model::{element_gradient_hessian, ElementEnergy, Material, MaterialModel};
pub use symvec::{SymVec, FROBENIUS_WEIGHTS, SYM_INDEX};
pub use table::{
    assemble_rest_strain_energy, assemble_strain_energy, MaterialConfig, MaterialOverride, MaterialTable, ModelTag,
    StrainEnergy, DEFAULT_MU,
};

/// Energy of `params` at `s`; see [`MaterialModel::energy`].
pub fn energy_value(params: &dyn MaterialModel, s: &SymVec) -> f64 {
    params.energy(s)
}
