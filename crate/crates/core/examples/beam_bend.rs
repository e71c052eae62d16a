//! Bend the procedural beam past 90 degrees and write one OBJ per frame.
//!
//!     cargo run --example beam_bend -- [out_dir]

use mfemskin::demo::{default_animation, BeamSpec};
use mfemskin::materials::{Material, MaterialTable};
use mfemskin::pipeline::{emit_timing_table, run_scene, ForceSpec};
use mfemskin::{Scene, SceneConfig};

fn main() -> mfemskin::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "beam_bend_out".into());
    let (mesh, skeleton) = BeamSpec::new([16, 4, 4], [4.0, 1.0, 1.0]).build()?;
    let materials = MaterialTable::homogeneous(Material::arap(1e3)?, mesh.n_tets());
    let scene = Scene::new(mesh, skeleton, materials, &SceneConfig::default())?;

    let poses = default_animation();
    let summary = run_scene(&scene, &poses, &ForceSpec::default(), false, out.as_ref(), "beam")?;

    println!("frame  angle  volume change  pin residual");
    for (r, pose) in summary.reports.iter().zip(&poses) {
        println!(
            "{:5}  {:5.1}  {:+12.4}%  {:12.3e}",
            r.frame,
            pose.rotations[1].angle().to_degrees(),
            r.volume_change_percent,
            r.max_pin_residual
        );
    }
    print!("{}", emit_timing_table(&[summary.timing]));
    println!("wrote {} OBJ files to {out}", summary.obj_files.len());
    Ok(())
}
