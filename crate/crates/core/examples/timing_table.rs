//! Per-frame timings on a beam of about 11.5k tets, written as a table row.
//!
//!     cargo run --release --example timing_table

use mfemskin::demo::{bend_animation, BeamSpec};
use mfemskin::materials::{Material, MaterialTable};
use mfemskin::pipeline::{emit_timing_table, solve_sequence, ForceSpec, TimingRow};
use mfemskin::{Scene, SceneConfig};

fn main() -> mfemskin::Result<()> {
    let (mesh, skeleton) = BeamSpec::large().build()?;
    let materials = MaterialTable::homogeneous(Material::arap(1e3)?, mesh.n_tets());
    let scene = Scene::new(mesh, skeleton, materials, &SceneConfig::default())?;
    let reports = solve_sequence(
        &scene,
        &bend_animation(10, 90f64.to_radians()),
        &ForceSpec::default(),
        false,
        |f, _, r| {
            println!(
                "frame {f}: assemble {:.3}s factor {:.3}s solve {:.3}s total {:.3}s",
                r.assemble_seconds, r.factor_seconds, r.solve_seconds, r.total_seconds
            );
            Ok(())
        },
    )?;
    print!("{}", emit_timing_table(&[TimingRow::new("beam", &scene, &reports)]));
    Ok(())
}
