use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rig::PinSet;

/// A constant load on one vertex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VertexLoad {
    pub vertex: usize,
    pub force: [f64; 3],
}

/// Pin penalty `k_s/2 |P x - x_p|^2` plus external loads `f`.
///
/// `H_x = k_s PᵀP`; the `x` row of the stationarity system reads
/// `H_x x + Bᵀλ = k_s Pᵀ x_p + f`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSystem {
    pub pinned: Vec<usize>,
    pub stiffness: f64,
    pub targets: Vec<f64>,
    pub force: Vec<f64>,
}

impl ConstraintSystem {
    pub fn new(pins: &PinSet, targets: Vec<f64>, n_vertices: usize) -> Result<Self> {
        if targets.len() != 3 * pins.len() {
            return Err(Error::Dimension(format!(
                "{} target coordinates for {} pins",
                targets.len(),
                pins.len()
            )));
        }
        Ok(ConstraintSystem {
            pinned: pins.indices.clone(),
            stiffness: pins.stiffness,
            targets,
            force: vec![0.0; 3 * n_vertices],
        })
    }

    pub fn with_loads(mut self, loads: &[VertexLoad]) -> Result<Self> {
        let n = self.force.len() / 3;
        for l in loads {
            if l.vertex >= n {
                return Err(Error::Config(format!("load on vertex {} but mesh has {n}", l.vertex)));
            }
            for c in 0..3 {
                self.force[3 * l.vertex + c] += l.force[c];
            }
        }
        Ok(self)
    }

    pub fn n_dofs(&self) -> usize {
        self.force.len()
    }

    pub fn has_load(&self) -> bool {
        self.force.iter().any(|&f| f != 0.0)
    }

    /// `k_s Pᵀ x_p + f`.
    pub fn rhs(&self) -> Vec<f64> {
        let mut out = self.force.clone();
        for (p, &i) in self.pinned.iter().enumerate() {
            for c in 0..3 {
                out[3 * i + c] += self.stiffness * self.targets[3 * p + c];
            }
        }
        out
    }

    /// `H_x x`.
    pub fn hessian_apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        for &i in &self.pinned {
            for c in 0..3 {
                out[3 * i + c] = self.stiffness * x[3 * i + c];
            }
        }
        out
    }

    /// `∇C(x) - f = k_s Pᵀ(P x - x_p) - f`.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let hx = self.hessian_apply(x);
        let rhs = self.rhs();
        hx.iter().zip(&rhs).map(|(a, b)| a - b).collect()
    }

    /// Largest pinned-vertex deviation `|P x - x_p|_∞`.
    pub fn pin_residual(&self, x: &[f64]) -> f64 {
        self.pinned
            .iter()
            .enumerate()
            .flat_map(|(p, &i)| (0..3).map(move |c| (x[3 * i + c] - self.targets[3 * p + c]).abs()))
            .fold(0.0, f64::max)
    }
}
