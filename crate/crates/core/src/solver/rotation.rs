use nalgebra::{Matrix3, SMatrix};

use crate::error::{Error, Result};
use crate::flatten::{vec9, Vector9};
use crate::materials::{SymVec, FROBENIUS_WEIGHTS};
use crate::rig::RotationClustering;

/// Maps a SymVec to the flattened `R · mat(s)`.
pub type RotationBlock = SMatrix<f64, 9, 6>;
pub type RotationPinv = SMatrix<f64, 6, 9>;

/// Rotations may deviate from orthonormal by at most this much.
pub const ORTHONORMAL_TOLERANCE: f64 = 1e-9;

/// Column `i` is `vec(R E_i)`.
pub fn rotation_block(r: &Matrix3<f64>) -> RotationBlock {
    let mut block = RotationBlock::zeros();
    for i in 0..6 {
        block.set_column(i, &vec9(&(r * SymVec::basis(i))));
    }
    block
}

/// Left pseudoinverse `([R]^T [R])^{-1} [R]^T`. For orthonormal `R` the
/// Gram matrix is `diag(1, 1, 1, 2, 2, 2)`, so the inverse is closed-form.
pub fn rotation_pinv(block: &RotationBlock) -> RotationPinv {
    let mut p = block.transpose();
    for i in 0..6 {
        p.row_mut(i).scale_mut(1.0 / FROBENIUS_WEIGHTS[i]);
    }
    p
}

/// Pseudoinverts a batch of rotation blocks.
pub fn batched_pinv(blocks: &[RotationBlock]) -> Vec<RotationPinv> {
    blocks.iter().map(rotation_pinv).collect()
}

pub fn orthonormality_defect(r: &Matrix3<f64>) -> f64 {
    let gram = (r.transpose() * r - Matrix3::identity()).abs().max();
    gram.max((r.determinant() - 1.0).abs())
}

/// Block-diagonal `[R]`, stored once per bone and shared by that bone's
/// cluster.
#[derive(Debug, Clone)]
pub struct RotationBlocks {
    rotations: Vec<Matrix3<f64>>,
    blocks: Vec<RotationBlock>,
    pinvs: Vec<RotationPinv>,
    element_bone: Vec<usize>,
}

impl RotationBlocks {
    pub fn build(clustering: &RotationClustering, bone_rotations: &[Matrix3<f64>]) -> Result<Self> {
        for (bone, r) in bone_rotations.iter().enumerate() {
            let deviation = orthonormality_defect(r);
            if !(deviation <= ORTHONORMAL_TOLERANCE) {
                return Err(Error::NonOrthonormalRotation { bone, deviation });
            }
        }
        if let Some(&b) = clustering.assignment.iter().find(|&&b| b >= bone_rotations.len()) {
            return Err(Error::Dimension(format!(
                "clustering uses bone {b}, only {} rotations given",
                bone_rotations.len()
            )));
        }
        let blocks: Vec<RotationBlock> = bone_rotations.iter().map(rotation_block).collect();
        let pinvs = batched_pinv(&blocks);
        Ok(RotationBlocks {
            rotations: bone_rotations.to_vec(),
            blocks,
            pinvs,
            element_bone: clustering.assignment.clone(),
        })
    }

    pub fn n_elements(&self) -> usize {
        self.element_bone.len()
    }

    pub fn rotation(&self, k: usize) -> &Matrix3<f64> {
        &self.rotations[self.element_bone[k]]
    }

    pub fn block(&self, k: usize) -> &RotationBlock {
        &self.blocks[self.element_bone[k]]
    }

    pub fn pinv(&self, k: usize) -> &RotationPinv {
        &self.pinvs[self.element_bone[k]]
    }

    /// Orthogonal projector onto the range of `[R_k]`, i.e. onto flattened
    /// matrices of the form `R_k S` with `S` symmetric.
    pub fn range_projector(&self, k: usize) -> SMatrix<f64, 9, 9> {
        self.block(k) * self.pinv(k)
    }

    /// `[R] s` for stacked SymVecs.
    pub fn apply(&self, s: &[SymVec]) -> Vec<f64> {
        let mut out = Vec::with_capacity(9 * s.len());
        for (k, sk) in s.iter().enumerate() {
            let v: Vector9 = self.block(k) * sk.0;
            out.extend_from_slice(v.as_slice());
        }
        out
    }
}
