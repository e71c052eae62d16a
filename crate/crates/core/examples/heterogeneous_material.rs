//! Stiff shell around a soft core: the soft material absorbs the bend.

use std::sync::Arc;

use mfemskin::demo::{bend_pose, BeamSpec};
use mfemskin::materials::{Material, MaterialConfig, MaterialModel, MaterialOverride, MaterialTable, SymVec};
use mfemskin::{Scene, SceneConfig};

fn mean_deviation(s: &[SymVec], elements: impl Iterator<Item = usize>) -> f64 {
    let (sum, n) = elements.fold((0.0, 0), |(sum, n), k| {
        (sum + (s[k].0 - SymVec::identity().0).norm(), n + 1)
    });
    sum / n as f64
}

fn main() -> mfemskin::Result<()> {
    let spec = BeamSpec::new([16, 4, 4], [4.0, 1.0, 1.0]);
    let (mesh, skeleton) = spec.build()?;
    let shell = spec.shell_elements(&mesh, 0.25);

    // same thing a material.json would say
    let config = MaterialConfig {
        mu: 1e3,
        overrides: vec![MaterialOverride {
            elements: Some(shell.clone()),
            region_file: None,
            mu: 1e6,
            lambda: 0.0,
        }],
        ..MaterialConfig::default()
    };
    println!(
        "{}",
        serde_json::to_string(&config)?.chars().take(120).collect::<String>() + " ..."
    );
    let materials = config.build_table(mesh.n_tets(), None)?;

    let mut is_shell = vec![false; mesh.n_tets()];
    for &k in &shell {
        is_shell[k] = true;
    }
    let scene = Scene::new(mesh, skeleton, materials, &SceneConfig::default())?;
    let sol = scene.solve(&bend_pose(90f64.to_radians()), &[])?;
    let n = is_shell.len();
    println!(
        "shell (mu 1e6): {} tets, mean |s - I| = {:.4e}",
        shell.len(),
        mean_deviation(&sol.s, (0..n).filter(|&k| is_shell[k]))
    );
    println!(
        "core  (mu 1e3): {} tets, mean |s - I| = {:.4e}",
        n - shell.len(),
        mean_deviation(&sol.s, (0..n).filter(|&k| !is_shell[k]))
    );

    // a table can also be built directly from models
    let models: Vec<Arc<dyn MaterialModel>> = vec![
        Arc::new(Material::arap(1e3)?),
        Arc::new(Material::corotational(1e3, 5e3)?),
    ];
    let table = MaterialTable::new(models, (0..n).map(|k| usize::from(k % 2 == 0)).collect())?;
    println!("alternating table quadratic: {}", table.all_quadratic());
    Ok(())
}
