use nalgebra::{Matrix3, Vector6};

/// Independent entries of a symmetric 3×3 matrix, ordered
/// `(xx, yy, zz, xy, xz, yz)`, stored without any √2 weighting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymVec(pub Vector6<f64>);

/// Index pairs for each SymVec slot.
pub const SYM_INDEX: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];

/// `<E_i, E_j>_F` for the SymVec basis: off-diagonal slots appear twice in
/// the full matrix.
pub const FROBENIUS_WEIGHTS: [f64; 6] = [1.0, 1.0, 1.0, 2.0, 2.0, 2.0];

impl SymVec {
    pub fn identity() -> Self {
        SymVec(Vector6::new(1.0, 1.0, 1.0, 0.0, 0.0, 0.0))
    }

    pub fn zeros() -> Self {
        SymVec(Vector6::zeros())
    }

    /// Packs the symmetric part of `m`.
    pub fn from_matrix(m: &Matrix3<f64>) -> Self {
        SymVec(Vector6::from_fn(|slot, _| {
            let (i, j) = SYM_INDEX[slot];
            if i == j {
                m[(i, j)]
            } else {
                0.5 * (m[(i, j)] + m[(j, i)])
            }
        }))
    }

    pub fn to_matrix(&self) -> Matrix3<f64> {
        let s = &self.0;
        Matrix3::new(s[0], s[3], s[4], s[3], s[1], s[5], s[4], s[5], s[2])
    }

    /// Basis matrix `E_i`; off-diagonal bases carry a one in both mirrored
    /// slots so that `mat(s) = sum_i s_i E_i`.
    pub fn basis(slot: usize) -> Matrix3<f64> {
        let (i, j) = SYM_INDEX[slot];
        let mut e = Matrix3::zeros();
        e[(i, j)] = 1.0;
        e[(j, i)] = 1.0;
        e
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }
}

impl From<Vector6<f64>> for SymVec {
    fn from(v: Vector6<f64>) -> Self {
        SymVec(v)
    }
}
