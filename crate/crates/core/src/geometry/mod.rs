//! Tetrahedral meshes, MEDIT/OBJ I/O and the deformation-gradient operator.

mod defgrad;
pub mod medit;
mod mesh;
pub mod obj;

pub use defgrad::{DefGradOperator, ElementDefGrad, Vector12};
pub use mesh::{mesh_volume, Surface, TetMesh, DEGENERACY_RATIO};

/// Reads a MEDIT `.mesh` file; see [`TetMesh::load`].
pub fn load_tet_mesh(path: impl AsRef<std::path::Path>) -> crate::Result<TetMesh> {
    TetMesh::load(path)
}
