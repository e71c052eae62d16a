use std::fmt::Debug;

use nalgebra::{Matrix6, Vector6};
use serde::{Deserialize, Serialize};

use super::symvec::{SymVec, FROBENIUS_WEIGHTS};
use crate::error::{Error, Result};

/// Strain energy density over the symmetric stretch `S`, in SymVec
/// coordinates. Gradients and Hessians are taken with respect to the six
/// stored entries, so off-diagonal terms pick up the factor two from the
/// mirrored slots.
pub trait MaterialModel: Send + Sync + Debug {
    fn energy(&self, s: &SymVec) -> f64;
    fn gradient(&self, s: &SymVec) -> Vector6<f64>;
    fn hessian(&self, s: &SymVec) -> Matrix6<f64>;

    /// Quadratic models have a constant Hessian, so one linearization is
    /// exact for every frame.
    fn is_quadratic(&self) -> bool {
        false
    }
}

/// The two shipped quadratic models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum Material {
    /// `mu |S - I|_F^2`
    Arap { mu: f64 },
    /// `mu |S - I|_F^2 + lambda/2 tr(S - I)^2`
    Corotational { mu: f64, lambda: f64 },
}

impl Material {
    pub fn arap(mu: f64) -> Result<Self> {
        Material::Arap { mu }.validated()
    }

    pub fn corotational(mu: f64, lambda: f64) -> Result<Self> {
        Material::Corotational { mu, lambda }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        let (mu, lambda) = self.lame();
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidMaterial(format!("mu must be positive, got {mu}")));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidMaterial(format!(
                "lambda must be non-negative, got {lambda}"
            )));
        }
        Ok(self)
    }

    pub fn lame(&self) -> (f64, f64) {
        match *self {
            Material::Arap { mu } => (mu, 0.0),
            Material::Corotational { mu, lambda } => (mu, lambda),
        }
    }
}

impl MaterialModel for Material {
    fn energy(&self, s: &SymVec) -> f64 {
        let (mu, lambda) = self.lame();
        let d = s.0 - SymVec::identity().0;
        let frob: f64 = (0..6).map(|i| FROBENIUS_WEIGHTS[i] * d[i] * d[i]).sum();
        let tr = d[0] + d[1] + d[2];
        mu * frob + 0.5 * lambda * tr * tr
    }

    fn gradient(&self, s: &SymVec) -> Vector6<f64> {
        let (mu, lambda) = self.lame();
        let d = s.0 - SymVec::identity().0;
        let tr = d[0] + d[1] + d[2];
        Vector6::from_fn(|i, _| 2.0 * mu * FROBENIUS_WEIGHTS[i] * d[i] + if i < 3 { lambda * tr } else { 0.0 })
    }

    fn hessian(&self, _s: &SymVec) -> Matrix6<f64> {
        let (mu, lambda) = self.lame();
        Matrix6::from_fn(|i, j| {
            let diag = if i == j { 2.0 * mu * FROBENIUS_WEIGHTS[i] } else { 0.0 };
            let vol = if i < 3 && j < 3 { lambda } else { 0.0 };
            diag + vol
        })
    }

    fn is_quadratic(&self) -> bool {
        true
    }
}

/// `w_k`-scaled Hessian and gradient of one element's energy, taken at
/// `linearization`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementEnergy {
    pub hessian: Matrix6<f64>,
    pub gradient: Vector6<f64>,
    pub linearization: SymVec,
}

impl ElementEnergy {
    /// Constant term of the stationarity equation in `s`:
    /// `H s - [R]^T λ = H s_lin - g`.
    pub fn affine_rhs(&self) -> Vector6<f64> {
        self.hessian * self.linearization.0 - self.gradient
    }
}

pub fn element_gradient_hessian(model: &dyn MaterialModel, s: &SymVec, volume: f64) -> ElementEnergy {
    debug_assert!(volume > 0.0);
    ElementEnergy {
        hessian: model.hessian(s) * volume,
        gradient: model.gradient(s) * volume,
        linearization: *s,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix3;

    #[test]
    fn rest_state_is_zero() {
        for m in [
            Material::Arap { mu: 3.0 },
            Material::Corotational { mu: 3.0, lambda: 7.0 },
        ] {
            assert_eq!(m.energy(&SymVec::identity()), 0.0);
            assert_eq!(m.gradient(&SymVec::identity()), Vector6::zeros());
        }
    }

    #[test]
    fn analytic_values() {
        let two_i = SymVec::from_matrix(&(2.0 * Matrix3::identity()));
        assert_eq!(Material::Arap { mu: 1.0 }.energy(&two_i), 3.0);
        let s = SymVec::from_matrix(&Matrix3::from_diagonal(&nalgebra::Vector3::new(2.0, 1.0, 1.0)));
        // Oracle: |S - I|_F^2 = 1 and tr(S - I)^2 / 2 = 0.5 by direct matrix arithmetic.
        let d = s.to_matrix() - Matrix3::identity();
        let expected = d.norm_squared() + 0.5 * d.trace().powi(2);
        assert_eq!(expected, 1.5);
        assert_eq!(Material::Corotational { mu: 1.0, lambda: 1.0 }.energy(&s), expected);
    }

    #[test]
    fn off_diagonal_hessian_weight() {
        let h = Material::Arap { mu: 1.0 }.hessian(&SymVec::identity());
        assert_eq!(h.diagonal(), Vector6::new(2.0, 2.0, 2.0, 4.0, 4.0, 4.0));
    }

    #[test]
    fn parameter_validation() {
        assert!(Material::arap(0.0).is_err());
        assert!(Material::corotational(1.0, -1.0).is_err());
        assert!(Material::corotational(1.0, 0.0).is_ok());
    }

    #[test]
    fn volume_scaling() {
        let m = Material::Corotational { mu: 2.0, lambda: 5.0 };
        let s = SymVec(Vector6::new(1.1, 0.9, 1.2, 0.1, -0.2, 0.05));
        let e = element_gradient_hessian(&m, &s, 0.25);
        assert_eq!(e.hessian, m.hessian(&s) * 0.25);
        assert_eq!(e.gradient, m.gradient(&s) * 0.25);
    }
}
