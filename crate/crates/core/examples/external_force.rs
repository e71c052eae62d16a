//! Loads on nine tip vertices, and the superposition of two load cases.

use mfemskin::demo::{bend_pose, BeamSpec};
use mfemskin::materials::{Material, MaterialTable};
use mfemskin::solver::VertexLoad;
use mfemskin::{Scene, SceneConfig};

fn main() -> mfemskin::Result<()> {
    let (mesh, skeleton) = BeamSpec::default().build()?;
    let materials = MaterialTable::homogeneous(Material::arap(1e3)?, mesh.n_tets());
    // small radius so the tip is free to move
    let config = SceneConfig {
        pin_radius: Some(0.3),
        ..SceneConfig::default()
    };
    let scene = Scene::new(mesh, skeleton, materials, &config)?;

    let tip: Vec<usize> = (0..scene.mesh().n_vertices())
        .filter(|&v| scene.mesh().vertices()[v].x > 3.99)
        .collect();
    println!("{} tip vertices", tip.len());
    let load = |f: [f64; 3]| -> Vec<VertexLoad> { tip.iter().map(|&vertex| VertexLoad { vertex, force: f }).collect() };
    let down = load([0.0, -20.0, 0.0]);
    let side = load([0.0, 0.0, 15.0]);
    let both: Vec<VertexLoad> = down.iter().chain(&side).copied().collect();

    let pose = bend_pose(0.4);
    let rest = scene.solve(&pose, &[])?.positions;
    let a = scene.solve(&pose, &down)?.positions;
    let b = scene.solve(&pose, &side)?.positions;
    let ab = scene.solve(&pose, &both)?.positions;

    let sag = tip.iter().map(|&v| a[3 * v + 1] - rest[3 * v + 1]).sum::<f64>() / tip.len() as f64;
    println!("mean tip displacement under downward load: {sag:.4e}");
    let err = (0..ab.len()).fold(0.0f64, |m, i| m.max((ab[i] - (a[i] + b[i] - rest[i])).abs()));
    println!("superposition error: {err:.3e}");
    Ok(())
}
