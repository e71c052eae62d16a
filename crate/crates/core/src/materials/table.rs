use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::model::{element_gradient_hessian, ElementEnergy, Material, MaterialModel};
use super::symvec::SymVec;
use crate::error::{Error, Result};
use crate::geometry::TetMesh;

/// Default shear modulus when a config omits `mu`.
pub const DEFAULT_MU: f64 = 1e3;

/// Per-element material assignment: a palette of models and one palette
/// index per tet.
#[derive(Debug, Clone)]
pub struct MaterialTable {
    models: Vec<Arc<dyn MaterialModel>>,
    element_model: Vec<usize>,
}

impl MaterialTable {
    pub fn homogeneous(model: impl MaterialModel + 'static, n_elements: usize) -> Self {
        MaterialTable {
            models: vec![Arc::new(model)],
            element_model: vec![0; n_elements],
        }
    }

    pub fn new(models: Vec<Arc<dyn MaterialModel>>, element_model: Vec<usize>) -> Result<Self> {
        if let Some(k) = element_model.iter().position(|&i| i >= models.len()) {
            return Err(Error::InvalidMaterial(format!(
                "element {k} refers to material {} of {}",
                element_model[k],
                models.len()
            )));
        }
        Ok(MaterialTable { models, element_model })
    }

    pub fn n_elements(&self) -> usize {
        self.element_model.len()
    }

    pub fn model(&self, k: usize) -> &dyn MaterialModel {
        self.models[self.element_model[k]].as_ref()
    }

    pub fn element_model_index(&self, k: usize) -> usize {
        self.element_model[k]
    }

    pub fn all_quadratic(&self) -> bool {
        self.models.iter().all(|m| m.is_quadratic())
    }

    /// Total energy `sum_k w_k Psi(s_k)`.
    pub fn energy(&self, volumes: &[f64], s: &[SymVec]) -> f64 {
        s.iter()
            .enumerate()
            .map(|(k, sk)| volumes[k] * self.model(k).energy(sk))
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelTag {
    Arap,
    Corotational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialOverride {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elements: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region_file: Option<PathBuf>,
    pub mu: f64,
    #[serde(default)]
    pub lambda: f64,
}

/// Material config file contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialConfig {
    pub model: ModelTag,
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub overrides: Vec<MaterialOverride>,
}

fn default_mu() -> f64 {
    DEFAULT_MU
}

impl Default for MaterialConfig {
    fn default() -> Self {
        MaterialConfig {
            model: ModelTag::Arap,
            mu: DEFAULT_MU,
            lambda: 0.0,
            overrides: Vec::new(),
        }
    }
}

impl MaterialConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    fn material(&self, mu: f64, lambda: f64) -> Result<Material> {
        match self.model {
            ModelTag::Arap => Material::arap(mu),
            ModelTag::Corotational => Material::corotational(mu, lambda),
        }
    }

    /// Resolves overrides (later entries win) into a per-element table.
    /// Relative `region_file` paths are taken from `base_dir`.
    pub fn build_table(&self, n_elements: usize, base_dir: Option<&Path>) -> Result<MaterialTable> {
        let mut models: Vec<Arc<dyn MaterialModel>> = vec![Arc::new(self.material(self.mu, self.lambda)?)];
        let mut element_model = vec![0; n_elements];
        for (o_idx, o) in self.overrides.iter().enumerate() {
            let mut elements = o.elements.clone().unwrap_or_default();
            if let Some(region) = &o.region_file {
                let path = match base_dir {
                    Some(dir) if region.is_relative() => dir.join(region),
                    _ => region.clone(),
                };
                let text = std::fs::read_to_string(&path)?;
                elements.extend(serde_json::from_str::<Vec<usize>>(&text)?);
            }
            if o.elements.is_none() && o.region_file.is_none() {
                return Err(Error::InvalidMaterial(format!(
                    "override {o_idx} names neither elements nor a region file"
                )));
            }
            models.push(Arc::new(self.material(o.mu, o.lambda)?));
            let palette = models.len() - 1;
            for k in elements {
                if k >= n_elements {
                    return Err(Error::InvalidMaterial(format!(
                        "override {o_idx} names element {k}, mesh has {n_elements}"
                    )));
                }
                element_model[k] = palette;
            }
        }
        MaterialTable::new(models, element_model)
    }
}

/// Block-diagonal `H_s` and stacked `g_s` for the whole mesh.
#[derive(Debug, Clone)]
pub struct StrainEnergy {
    pub blocks: Vec<ElementEnergy>,
}

impl StrainEnergy {
    pub fn n_elements(&self) -> usize {
        self.blocks.len()
    }

    /// Dense `6m × 6m` block-diagonal Hessian. Intended for small meshes.
    pub fn hessian_dense(&self) -> DMatrix<f64> {
        let m = self.blocks.len();
        let mut h = DMatrix::zeros(6 * m, 6 * m);
        for (k, b) in self.blocks.iter().enumerate() {
            h.view_mut((6 * k, 6 * k), (6, 6)).copy_from(&b.hessian);
        }
        h
    }

    pub fn gradient_stacked(&self) -> DVector<f64> {
        DVector::from_iterator(
            6 * self.blocks.len(),
            self.blocks.iter().flat_map(|b| b.gradient.iter().copied()),
        )
    }
}

pub fn assemble_strain_energy(mesh: &TetMesh, table: &MaterialTable, s_values: &[SymVec]) -> Result<StrainEnergy> {
    let m = mesh.n_tets();
    if s_values.len() != m {
        return Err(Error::Dimension(format!(
            "{} strain values for {m} elements",
            s_values.len()
        )));
    }
    if table.n_elements() != m {
        return Err(Error::InvalidMaterial(format!(
            "material table covers {} elements, mesh has {m}",
            table.n_elements()
        )));
    }
    let blocks = s_values
        .iter()
        .enumerate()
        .map(|(k, s)| element_gradient_hessian(table.model(k), s, mesh.volumes()[k]))
        .collect();
    Ok(StrainEnergy { blocks })
}

/// Evaluates every element at the rest state `S = I`.
pub fn assemble_rest_strain_energy(mesh: &TetMesh, table: &MaterialTable) -> Result<StrainEnergy> {
    assemble_strain_energy(mesh, table, &vec![SymVec::identity(); mesh.n_tets()])
}
