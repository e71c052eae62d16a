//! Weight-free character skinning by a mixed finite element solve.
//!
//! Rig rotations are injected directly as per-element rotation variables.
//! With rotations fixed, ARAP and corotational elasticity become quadratic
//! in positions and strain, and each frame reduces to one sparse SPD solve.

pub mod demo;
mod error;
pub mod flatten;
pub mod geometry;
pub mod materials;
pub mod pipeline;
pub mod rig;
pub mod scene;
pub mod service;
pub mod solver;

pub use error::{Error, Result};
pub use scene::{FrameSolution, Scene, SceneConfig, StageTimings, ValidationReport};
