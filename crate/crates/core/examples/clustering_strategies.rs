//! Compare the four ways of assigning tets to bones.

use mfemskin::demo::{bend_pose, BeamSpec};
use mfemskin::materials::{Material, MaterialTable};
use mfemskin::rig::{cluster_rotations, ClusterStrategy};
use mfemskin::{Scene, SceneConfig};

fn main() -> mfemskin::Result<()> {
    let (mesh, skeleton) = BeamSpec::new([16, 4, 4], [4.0, 1.0, 1.0]).build()?;
    // user table: split the beam at x = 1.5 instead of the joint
    let user: Vec<usize> = (0..mesh.n_tets())
        .map(|k| usize::from(mesh.barycenter(k).x > 1.5))
        .collect();
    let reference = cluster_rotations(&mesh, &skeleton, ClusterStrategy::ClosestBone, None)?;

    for strategy in [
        ClusterStrategy::ClosestBone,
        ClusterStrategy::ClosestJoint,
        ClusterStrategy::Hierarchy,
        ClusterStrategy::User,
    ] {
        let config = SceneConfig {
            clustering: strategy,
            user_table: Some(user.clone()),
            ..SceneConfig::default()
        };
        let materials = MaterialTable::homogeneous(Material::arap(1e3)?, mesh.n_tets());
        let scene = Scene::new(mesh.clone(), skeleton.clone(), materials, &config)?;
        let differ = (0..mesh.n_tets())
            .filter(|&k| scene.clustering().bone_of(k) != reference.bone_of(k))
            .count();
        let sol = scene.solve(&bend_pose(90f64.to_radians()), &[])?;
        println!(
            "{strategy:>9}: cluster sizes {:?}, {differ:4} tets differ from closest-bone, volume change {:+.3}%",
            scene.clustering().cluster_sizes(skeleton.n_bones()),
            100.0 * (scene.volume(&sol.positions) / mesh.total_volume() - 1.0)
        );
    }
    Ok(())
}
