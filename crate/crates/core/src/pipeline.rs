//! Batch frame loop: load inputs once, solve every pose, export surfaces
//! and reports.

use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{obj::write_surface_obj, TetMesh};
use crate::materials::{MaterialConfig, StrainEnergy};
use crate::rig::{load_user_table, ClusterStrategy, PoseFrame, RigFile};
use crate::scene::{FrameSolution, Scene, SceneConfig, ValidationReport, DEFAULT_PIN_STIFFNESS};
use crate::solver::VertexLoad;

/// External loads: `constant` applies to every frame, `frames[i]` adds to
/// frame `i` only.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ForceSpec {
    #[serde(default)]
    pub constant: Vec<VertexLoad>,
    #[serde(default)]
    pub frames: Vec<Vec<VertexLoad>>,
}

impl ForceSpec {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn for_frame(&self, frame: usize) -> Vec<VertexLoad> {
        let mut loads = self.constant.clone();
        if let Some(extra) = self.frames.get(frame) {
            loads.extend_from_slice(extra);
        }
        loads
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mesh: PathBuf,
    pub rig: PathBuf,
    /// Defaults to ARAP with `mu = 1e3`.
    pub material: Option<PathBuf>,
    pub clustering: ClusterStrategy,
    /// Required when `clustering` is `User`.
    pub user_table: Option<PathBuf>,
    pub pin_radius: Option<f64>,
    pub pin_stiffness: f64,
    pub forces: Option<PathBuf>,
    pub out: PathBuf,
    pub validate: bool,
}

impl RunConfig {
    pub fn new(mesh: impl Into<PathBuf>, rig: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        RunConfig {
            mesh: mesh.into(),
            rig: rig.into(),
            material: None,
            clustering: ClusterStrategy::ClosestBone,
            user_table: None,
            pin_radius: None,
            pin_stiffness: DEFAULT_PIN_STIFFNESS,
            forces: None,
            out: out.into(),
            validate: false,
        }
    }

    pub fn model_name(&self) -> String {
        self.mesh
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "model".into())
    }

    fn check(&self) -> Result<()> {
        let mut paths = vec![&self.mesh, &self.rig];
        paths.extend(self.material.iter());
        paths.extend(self.user_table.iter());
        paths.extend(self.forces.iter());
        if let Some(p) = paths.iter().find(|p| !p.exists()) {
            return Err(Error::Config(format!("{} does not exist", p.display())));
        }
        if !(self.pin_stiffness > 0.0 && self.pin_stiffness.is_finite()) {
            return Err(Error::Config(format!(
                "k_s must be positive, got {}",
                self.pin_stiffness
            )));
        }
        if let Some(r) = self.pin_radius {
            if !(r > 0.0) {
                return Err(Error::Config(format!("pin radius must be positive, got {r}")));
            }
        }
        if self.clustering == ClusterStrategy::User && self.user_table.is_none() {
            return Err(Error::Config("user clustering needs an assignment table".into()));
        }
        Ok(())
    }

    /// Loads the scene and the animation.
    pub fn load_scene(&self) -> Result<(Scene, Vec<PoseFrame>)> {
        self.check()?;
        let mesh = TetMesh::load(&self.mesh)?;
        let rig = RigFile::load(&self.rig)?;
        let skeleton = rig.skeleton()?;
        let poses = rig.poses()?;
        let material = match &self.material {
            Some(p) => MaterialConfig::load(p)?,
            None => MaterialConfig::default(),
        };
        let base_dir = self.material.as_deref().and_then(Path::parent);
        let table = material.build_table(mesh.n_tets(), base_dir)?;
        let user_table = self.user_table.as_ref().map(load_user_table).transpose()?;
        let config = SceneConfig {
            clustering: self.clustering,
            user_table,
            pin_radius: self.pin_radius,
            pin_stiffness: self.pin_stiffness,
        };
        Ok((Scene::new(mesh, skeleton, table, &config)?, poses))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameReport {
    pub frame: usize,
    pub assemble_seconds: f64,
    pub factor_seconds: f64,
    pub solve_seconds: f64,
    pub total_seconds: f64,
    pub volume: f64,
    pub volume_change_percent: f64,
    pub max_pin_residual: f64,
    pub relative_residual: f64,
    pub constraint_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validation: Option<ValidationReport>,
}

impl FrameReport {
    pub fn new(frame: usize, scene: &Scene, sol: &FrameSolution, validation: Option<ValidationReport>) -> Self {
        let rest = scene.mesh().total_volume();
        let volume = scene.volume(&sol.positions);
        FrameReport {
            frame,
            assemble_seconds: sol.timings.assemble,
            factor_seconds: sol.timings.factor,
            solve_seconds: sol.timings.solve,
            total_seconds: sol.timings.total,
            volume,
            volume_change_percent: 100.0 * (volume - rest) / rest,
            max_pin_residual: sol.pin_residual,
            relative_residual: sol.relative_residual,
            constraint_residual: sol.constraint_residual,
            validation,
        }
    }
}

/// One row of the timing table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingRow {
    pub model: String,
    pub vertices: usize,
    pub tets: usize,
    pub stiffness: f64,
    /// Mean wall time per frame, in seconds.
    pub sec_per_frame: f64,
}

impl TimingRow {
    pub fn new(model: &str, scene: &Scene, reports: &[FrameReport]) -> Self {
        let mean = if reports.is_empty() {
            0.0
        } else {
            reports.iter().map(|r| r.total_seconds).sum::<f64>() / reports.len() as f64
        };
        TimingRow {
            model: model.to_string(),
            vertices: scene.mesh().n_vertices(),
            tets: scene.mesh().n_tets(),
            stiffness: scene.pins().stiffness,
            sec_per_frame: mean,
        }
    }
}

/// CSV with header `model,vertices,tets,k_s,sec_per_frame`.
pub fn emit_timing_table(rows: &[TimingRow]) -> String {
    let mut out = String::from("model,vertices,tets,k_s,sec_per_frame\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{:.1},{:.6}",
            r.model, r.vertices, r.tets, r.stiffness, r.sec_per_frame
        );
    }
    out
}

#[derive(Debug, Clone, Serialize)]
struct Manifest<'a> {
    model: &'a str,
    vertices: usize,
    tets: usize,
    surface_vertices: usize,
    pins: usize,
    pin_radius: f64,
    k_s: f64,
    clustering: String,
    frames: Vec<String>,
    reports: &'a [FrameReport],
}

#[derive(Debug, Clone, Serialize)]
struct ValidationEntry {
    frame: usize,
    #[serde(flatten)]
    report: ValidationReport,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub reports: Vec<FrameReport>,
    pub timing: TimingRow,
    pub obj_files: Vec<PathBuf>,
}

/// Solves `poses` in order. Non-quadratic materials are re-linearized at
/// each frame's strain before the next frame.
pub fn solve_sequence(
    scene: &Scene,
    poses: &[PoseFrame],
    forces: &ForceSpec,
    validate: bool,
    mut on_frame: impl FnMut(usize, &FrameSolution, &FrameReport) -> Result<()>,
) -> Result<Vec<FrameReport>> {
    let quadratic = scene.materials().all_quadratic();
    let mut energy: Arc<StrainEnergy> = Arc::clone(scene.rest_energy());
    let mut reports = Vec::with_capacity(poses.len());
    for (f, pose) in poses.iter().enumerate() {
        let sol = scene
            .solve_with_energy(pose, &forces.for_frame(f), Arc::clone(&energy))
            .map_err(|e| e.in_frame(f))?;
        if !sol.positions.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { frame: f });
        }
        let validation = if validate {
            Some(scene.validate(&sol).map_err(|e| e.in_frame(f))?)
        } else {
            None
        };
        let report = FrameReport::new(f, scene, &sol, validation);
        log::info!(
            "frame {f}: {:.4}s, volume change {:+.3}%, pin residual {:.2e}",
            report.total_seconds,
            report.volume_change_percent,
            report.max_pin_residual
        );
        on_frame(f, &sol, &report)?;
        if !quadratic {
            energy = scene.linearize(&sol.s)?;
        }
        reports.push(report);
    }
    Ok(reports)
}

/// Runs the whole animation and writes `frame_NNNN.obj`, `manifest.json`,
/// `timing.csv` and, when validating, `validation.json` into `config.out`.
pub fn run_pipeline(config: &RunConfig) -> Result<RunSummary> {
    let (scene, poses) = config.load_scene()?;
    let forces = match &config.forces {
        Some(p) => ForceSpec::load(p)?,
        None => ForceSpec::default(),
    };
    run_scene(
        &scene,
        &poses,
        &forces,
        config.validate,
        &config.out,
        &config.model_name(),
    )
}

pub fn run_scene(
    scene: &Scene,
    poses: &[PoseFrame],
    forces: &ForceSpec,
    validate: bool,
    out: &Path,
    model: &str,
) -> Result<RunSummary> {
    if poses.is_empty() {
        return Err(Error::Config("animation has no frames".into()));
    }
    std::fs::create_dir_all(out)?;
    let mut obj_files = Vec::with_capacity(poses.len());
    let reports = solve_sequence(scene, poses, forces, validate, |f, sol, _| {
        let path = out.join(format!("frame_{f:04}.obj"));
        let mut w = BufWriter::new(File::create(&path)?);
        write_surface_obj(&mut w, scene.mesh(), &sol.positions)?;
        obj_files.push(path);
        Ok(())
    })?;

    let timing = TimingRow::new(model, scene, &reports);
    std::fs::write(out.join("timing.csv"), emit_timing_table(std::slice::from_ref(&timing)))?;
    let manifest = Manifest {
        model,
        vertices: scene.mesh().n_vertices(),
        tets: scene.mesh().n_tets(),
        surface_vertices: scene.mesh().surface().vertices.len(),
        pins: scene.pins().len(),
        pin_radius: scene.pin_radius(),
        k_s: scene.pins().stiffness,
        clustering: scene.clustering().strategy.to_string(),
        frames: obj_files
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect(),
        reports: &reports,
    };
    std::fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    if validate {
        let entries: Vec<ValidationEntry> = reports
            .iter()
            .filter_map(|r| r.validation.map(|report| ValidationEntry { frame: r.frame, report }))
            .collect();
        std::fs::write(out.join("validation.json"), serde_json::to_string_pretty(&entries)?)?;
    }
    Ok(RunSummary {
        reports,
        timing,
        obj_files,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo::{bend_animation, write_demo_assets, BeamSpec};
    use crate::geometry::obj::read_obj_vertices;

    fn demo_config(dir: &Path) -> RunConfig {
        write_demo_assets(dir, &BeamSpec::default(), &bend_animation(3, 1.0)).unwrap();
        RunConfig {
            material: Some(dir.join("material.json")),
            ..RunConfig::new(dir.join("beam.mesh"), dir.join("rig.json"), dir.join("out"))
        }
    }

    #[test]
    fn writes_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = demo_config(dir.path());
        config.validate = true;
        let summary = run_pipeline(&config).unwrap();
        assert_eq!(summary.reports.len(), 3);
        for name in [
            "frame_0000.obj",
            "frame_0002.obj",
            "manifest.json",
            "timing.csv",
            "validation.json",
        ] {
            assert!(config.out.join(name).exists(), "{name}");
        }
        let rest = read_obj_vertices(&std::fs::read_to_string(config.out.join("frame_0000.obj")).unwrap());
        let mesh = TetMesh::load(&config.mesh).unwrap();
        let expected = mesh.surface_positions(&mesh.rest_positions());
        assert_eq!(rest.len(), expected.len());
        for (a, b) in rest.iter().zip(&expected) {
            for c in 0..3 {
                assert!((a[c] - b[c]).abs() < 1e-6);
            }
        }
        let validation: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(config.out.join("validation.json")).unwrap()).unwrap();
        assert_eq!(validation.as_array().unwrap().len(), 3);
        assert!(validation[2]["rel_diff_condensed_vs_kkt"].as_f64().unwrap() < 1e-8);
    }

    #[test]
    fn reruns_are_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let config = demo_config(dir.path());
        run_pipeline(&config).unwrap();
        let first = std::fs::read(config.out.join("frame_0002.obj")).unwrap();
        run_pipeline(&config).unwrap();
        assert_eq!(first, std::fs::read(config.out.join("frame_0002.obj")).unwrap());
    }

    #[test]
    fn missing_input_is_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = demo_config(dir.path());
        config.rig = dir.path().join("nope.json");
        let err = run_pipeline(&config).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(!err.is_numerical());
    }

    #[test]
    fn timing_table_rows() {
        let row = TimingRow {
            model: "beam".into(),
            vertices: 81,
            tets: 192,
            stiffness: 1000.0,
            sec_per_frame: 0.25,
        };
        let table = emit_timing_table(&[row]);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(
            lines,
            ["model,vertices,tets,k_s,sec_per_frame", "beam,81,192,1000.0,0.250000"]
        );
    }

    #[test]
    fn forces_combine_constant_and_per_frame() {
        let spec: ForceSpec = serde_json::from_str(
            r#"{"constant":[{"vertex":1,"force":[0,0,1]}],"frames":[[],[{"vertex":2,"force":[1,0,0]}]]}"#,
        )
        .unwrap();
        assert_eq!(spec.for_frame(0).len(), 1);
        assert_eq!(spec.for_frame(1).len(), 2);
        assert_eq!(spec.for_frame(7).len(), 1);
    }
}
