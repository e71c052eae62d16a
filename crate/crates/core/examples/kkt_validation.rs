//! Solve random poses through the condensed system and check each one
//! against the full saddle-point system.

use nalgebra::{UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mfemskin::demo::BeamSpec;
use mfemskin::materials::{Material, MaterialTable};
use mfemskin::rig::PoseFrame;
use mfemskin::{Scene, SceneConfig};

fn main() -> mfemskin::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for material in [Material::arap(1e3)?, Material::corotational(1e3, 2e3)?] {
        let (mesh, skeleton) = BeamSpec::default().build()?;
        let scene = Scene::new(
            mesh,
            skeleton,
            MaterialTable::homogeneous(material, 192),
            &SceneConfig::default(),
        )?;
        println!("{material:?}");
        for _ in 0..5 {
            let mut pose = PoseFrame::identity(3);
            for q in pose.rotations.iter_mut() {
                let axis = Vector3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                );
                *q = UnitQuaternion::from_scaled_axis(axis * rng.random_range(0.0..1.5));
            }
            let sol = scene.solve(&pose, &[])?;
            let v = scene.validate(&sol)?;
            println!(
                "  |x - x_kkt|/|x_kkt| = {:.2e}  stationarity = {:.2e}  |Bx - [R]s| = {:.3}",
                v.rel_diff_condensed_vs_kkt, v.stationarity_residual, v.constraint_residual
            );
        }
    }
    Ok(())
}
