//! A loaded character: everything that stays fixed across frames, plus the
//! per-pose solve.

use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{mesh_volume, DefGradOperator, TetMesh};
use crate::materials::{assemble_rest_strain_energy, assemble_strain_energy, MaterialTable, StrainEnergy, SymVec};
use crate::rig::{
    cluster_rotations, default_pin_radius, forward_kinematics, pin_targets, select_pins, ClusterStrategy, PinSet,
    PoseFrame, RotationClustering, Skeleton,
};
use crate::solver::{
    assemble_condensed, lagrangian_residuals, norm2, recover_multipliers_and_strain, solve_full_kkt, ConstraintSystem,
    RotationBlocks, SystemPattern, VertexLoad, DEFAULT_ORACLE_LIMIT,
};

pub const DEFAULT_PIN_STIFFNESS: f64 = 1000.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    pub clustering: ClusterStrategy,
    pub user_table: Option<Vec<usize>>,
    /// `None` selects 1.5 × mean surface edge length.
    pub pin_radius: Option<f64>,
    pub pin_stiffness: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            clustering: ClusterStrategy::ClosestBone,
            user_table: None,
            pin_radius: None,
            pin_stiffness: DEFAULT_PIN_STIFFNESS,
        }
    }
}

#[derive(Debug)]
pub struct Scene {
    mesh: TetMesh,
    skeleton: Skeleton,
    materials: MaterialTable,
    clustering: RotationClustering,
    pins: PinSet,
    pin_radius: f64,
    defgrad: DefGradOperator,
    pattern: Arc<SystemPattern>,
    rest_energy: Arc<StrainEnergy>,
}

/// Wall-clock seconds per stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct StageTimings {
    pub assemble: f64,
    pub factor: f64,
    pub solve: f64,
    pub total: f64,
}

#[derive(Debug, Clone)]
pub struct FrameSolution {
    /// Stacked vertex positions, length `3n`.
    pub positions: Vec<f64>,
    pub s: Vec<SymVec>,
    pub lambda: Vec<f64>,
    pub constraint_residual: f64,
    pub relative_residual: f64,
    pub pin_residual: f64,
    pub refinement_steps: usize,
    pub timings: StageTimings,
    pub rotations: RotationBlocks,
    pub constraints: ConstraintSystem,
    pub energy: Arc<StrainEnergy>,
    pub rhs_norm: f64,
}

/// Condensed solution checked against the uncondensed saddle-point solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidationReport {
    /// `|x_condensed - x_kkt|_∞ / |x_kkt|_∞`.
    pub rel_diff_condensed_vs_kkt: f64,
    /// Largest Lagrangian gradient block, divided by `|b|`.
    pub stationarity_residual: f64,
    pub constraint_residual: f64,
}

impl Scene {
    pub fn new(mesh: TetMesh, skeleton: Skeleton, materials: MaterialTable, config: &SceneConfig) -> Result<Self> {
        if materials.n_elements() != mesh.n_tets() {
            return Err(Error::InvalidMaterial(format!(
                "material table covers {} elements, mesh has {}",
                materials.n_elements(),
                mesh.n_tets()
            )));
        }
        if !(config.pin_stiffness > 0.0 && config.pin_stiffness.is_finite()) {
            return Err(Error::Config(format!(
                "pin stiffness must be positive, got {}",
                config.pin_stiffness
            )));
        }
        let clustering = cluster_rotations(&mesh, &skeleton, config.clustering, config.user_table.as_deref())?;
        let pin_radius = config.pin_radius.unwrap_or_else(|| default_pin_radius(&mesh));
        let pins = select_pins(&mesh, &skeleton, pin_radius, config.pin_stiffness)?;
        let defgrad = DefGradOperator::new(&mesh)?;
        let pattern = Arc::new(SystemPattern::new(&defgrad));
        let rest_energy = Arc::new(assemble_rest_strain_energy(&mesh, &materials)?);
        log::info!(
            "scene: {} vertices, {} tets, {} bones, {} pins (radius {pin_radius:.4})",
            mesh.n_vertices(),
            mesh.n_tets(),
            skeleton.n_bones(),
            pins.len()
        );
        Ok(Scene {
            mesh,
            skeleton,
            materials,
            clustering,
            pins,
            pin_radius,
            defgrad,
            pattern,
            rest_energy,
        })
    }

    pub fn mesh(&self) -> &TetMesh {
        &self.mesh
    }

    pub fn skeleton(&self) -> &Skeleton {
        &self.skeleton
    }

    pub fn materials(&self) -> &MaterialTable {
        &self.materials
    }

    pub fn clustering(&self) -> &RotationClustering {
        &self.clustering
    }

    pub fn pins(&self) -> &PinSet {
        &self.pins
    }

    pub fn pin_radius(&self) -> f64 {
        self.pin_radius
    }

    pub fn defgrad(&self) -> &DefGradOperator {
        &self.defgrad
    }

    pub fn pattern(&self) -> &Arc<SystemPattern> {
        &self.pattern
    }

    /// Strain energy linearized at the rest state.
    pub fn rest_energy(&self) -> &Arc<StrainEnergy> {
        &self.rest_energy
    }

    /// Re-linearizes the material energy at `s`. Only needed for
    /// non-quadratic materials.
    pub fn linearize(&self, s: &[SymVec]) -> Result<Arc<StrainEnergy>> {
        Ok(Arc::new(assemble_strain_energy(&self.mesh, &self.materials, s)?))
    }

    pub fn constraints(&self, pose: &PoseFrame, loads: &[VertexLoad]) -> Result<(RotationBlocks, ConstraintSystem)> {
        let fk = forward_kinematics(&self.skeleton, pose)?;
        let rotations = RotationBlocks::build(&self.clustering, &fk.bone_rotations())?;
        let constraints = ConstraintSystem::new(&self.pins, pin_targets(&self.pins, &fk), self.mesh.n_vertices())?
            .with_loads(loads)?;
        Ok((rotations, constraints))
    }

    /// Solves one pose with the rest linearization.
    pub fn solve(&self, pose: &PoseFrame, loads: &[VertexLoad]) -> Result<FrameSolution> {
        self.solve_with_energy(pose, loads, Arc::clone(&self.rest_energy))
    }

    pub fn solve_with_energy(
        &self,
        pose: &PoseFrame,
        loads: &[VertexLoad],
        energy: Arc<StrainEnergy>,
    ) -> Result<FrameSolution> {
        let start = Instant::now();
        let (rotations, constraints) = self.constraints(pose, loads)?;
        let system = assemble_condensed(&self.pattern, &self.defgrad, &rotations, &energy, &constraints)?;
        let assembled = Instant::now();
        let factored = system.factor()?;
        let factor_done = Instant::now();
        let out = factored.solve()?;
        let rec = recover_multipliers_and_strain(&out.x, self.mesh.volumes(), &self.defgrad, &rotations, &energy);
        let end = Instant::now();
        let pin_residual = constraints.pin_residual(&out.x);
        Ok(FrameSolution {
            rhs_norm: norm2(system.rhs()),
            positions: out.x,
            s: rec.s,
            lambda: rec.lambda,
            constraint_residual: rec.constraint_residual,
            relative_residual: out.relative_residual,
            pin_residual,
            refinement_steps: out.refinement_steps,
            timings: StageTimings {
                assemble: (assembled - start).as_secs_f64(),
                factor: (factor_done - assembled).as_secs_f64(),
                solve: (end - factor_done).as_secs_f64(),
                total: (end - start).as_secs_f64(),
            },
            rotations,
            constraints,
            energy,
        })
    }

    pub fn volume(&self, positions: &[f64]) -> f64 {
        mesh_volume(&self.mesh, positions)
    }

    /// Cross-checks a solution against the saddle-point solve and the
    /// Lagrangian stationarity conditions.
    pub fn validate(&self, sol: &FrameSolution) -> Result<ValidationReport> {
        self.validate_with_limit(sol, DEFAULT_ORACLE_LIMIT)
    }

    pub fn validate_with_limit(&self, sol: &FrameSolution, limit: usize) -> Result<ValidationReport> {
        let volumes = self.mesh.volumes();
        let kkt = solve_full_kkt(
            volumes,
            &self.defgrad,
            &sol.rotations,
            &sol.energy,
            &sol.constraints,
            limit,
        )?;
        let scale = kkt.x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let diff = kkt
            .x
            .iter()
            .zip(&sol.positions)
            .fold(0.0f64, |a, (k, c)| a.max((k - c).abs()));
        let res = lagrangian_residuals(
            &sol.positions,
            &sol.s,
            &sol.lambda,
            volumes,
            &self.defgrad,
            &sol.rotations,
            &sol.energy,
            &sol.constraints,
        );
        Ok(ValidationReport {
            rel_diff_condensed_vs_kkt: if scale > 0.0 { diff / scale } else { diff },
            stationarity_residual: if sol.rhs_norm > 0.0 {
                res.max() / sol.rhs_norm
            } else {
                res.max()
            },
            constraint_residual: sol.constraint_residual,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo::{bend_pose, BeamSpec};
    use crate::materials::Material;

    fn beam(material: Material) -> Scene {
        let (mesh, skel) = BeamSpec::default().build().unwrap();
        let table = MaterialTable::homogeneous(material, mesh.n_tets());
        Scene::new(mesh, skel, table, &SceneConfig::default()).unwrap()
    }

    #[test]
    fn identity_pose_keeps_rest() {
        let scene = beam(Material::Arap { mu: 1e3 });
        let sol = scene.solve(&PoseFrame::identity(3), &[]).unwrap();
        let rest = scene.mesh().rest_positions();
        let d = sol
            .positions
            .iter()
            .zip(&rest)
            .fold(0.0f64, |a, (x, r)| a.max((x - r).abs()));
        assert!(d < 1e-9, "{d}");
        assert!(sol.lambda.iter().all(|l| l.abs() < 1e-8));
    }

    #[test]
    fn bend_matches_reference() {
        for mat in [
            Material::Arap { mu: 1e3 },
            Material::Corotational { mu: 1e3, lambda: 5e2 },
        ] {
            let scene = beam(mat);
            let sol = scene.solve(&bend_pose(1.2), &[]).unwrap();
            let v = scene.validate(&sol).unwrap();
            assert!(v.rel_diff_condensed_vs_kkt < 1e-8, "{v:?}");
            assert!(v.stationarity_residual < 1e-6, "{v:?}");
        }
    }

    #[test]
    fn symbolic_factorization_is_reused() {
        let scene = beam(Material::Arap { mu: 1e3 });
        scene.solve(&bend_pose(0.3), &[]).unwrap();
        assert!(scene.pattern().has_symbolic_factorization());
        let pattern = Arc::as_ptr(scene.pattern());
        let sol = scene.solve(&bend_pose(0.9), &[]).unwrap();
        assert!(std::ptr::eq(pattern, Arc::as_ptr(scene.pattern())));
        assert!(sol.relative_residual < 1e-10);
    }

    #[test]
    fn rejects_mismatched_material_table() {
        let (mesh, skel) = BeamSpec::default().build().unwrap();
        let table = MaterialTable::homogeneous(Material::Arap { mu: 1.0 }, 3);
        assert!(Scene::new(mesh, skel, table, &SceneConfig::default()).is_err());
    }
}
