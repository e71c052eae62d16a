//! Row-major flattening shared by the deformation-gradient operator, the
//! rotation blocks and the strain 6-vectors.
//!
//! `vec9(M)[3 * i + j] == M[(i, j)]`.

use nalgebra::{Matrix3, SVector};

pub type Vector9 = SVector<f64, 9>;

#[inline]
pub fn vec9(m: &Matrix3<f64>) -> Vector9 {
    let mut v = Vector9::zeros();
    for i in 0..3 {
        for j in 0..3 {
            v[3 * i + j] = m[(i, j)];
        }
    }
    v
}

#[inline]
pub fn mat3(v: &Vector9) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| v[3 * i + j])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn row_major_layout() {
        let m = Matrix3::new(1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0);
        let v = vec9(&m);
        assert_eq!(v.as_slice(), &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]);
    }

    proptest! {
        #[test]
        fn round_trip(entries in prop::array::uniform9(-1e3f64..1e3)) {
            let m = Matrix3::from_row_slice(&entries);
            prop_assert_eq!(mat3(&vec9(&m)), m);
        }
    }
}
