//! Plugging in a non-quadratic material. Its Hessian changes with the
//! strain, so the frame loop re-linearizes after every frame.

use nalgebra::{Matrix6, Vector6};

use mfemskin::demo::{bend_animation, BeamSpec};
use mfemskin::materials::{MaterialModel, MaterialTable, SymVec, FROBENIUS_WEIGHTS};
use mfemskin::pipeline::{solve_sequence, ForceSpec};
use mfemskin::{Scene, SceneConfig};

/// `mu |S - I|^2 + beta |S - I|^4`, stiffening under large strain.
#[derive(Debug)]
struct Stiffening {
    mu: f64,
    beta: f64,
}

impl Stiffening {
    fn parts(&self, s: &SymVec) -> (Vector6<f64>, f64) {
        let d = s.0 - SymVec::identity().0;
        let q = (0..6).map(|i| FROBENIUS_WEIGHTS[i] * d[i] * d[i]).sum();
        (d, q)
    }
}

impl MaterialModel for Stiffening {
    fn energy(&self, s: &SymVec) -> f64 {
        let (_, q) = self.parts(s);
        self.mu * q + self.beta * q * q
    }

    fn gradient(&self, s: &SymVec) -> Vector6<f64> {
        let (d, q) = self.parts(s);
        let wd = Vector6::from_fn(|i, _| FROBENIUS_WEIGHTS[i] * d[i]);
        wd * (2.0 * self.mu + 4.0 * self.beta * q)
    }

    fn hessian(&self, s: &SymVec) -> Matrix6<f64> {
        let (d, q) = self.parts(s);
        let wd = Vector6::from_fn(|i, _| FROBENIUS_WEIGHTS[i] * d[i]);
        let w = Matrix6::from_diagonal(&Vector6::from(FROBENIUS_WEIGHTS));
        w * (2.0 * self.mu + 4.0 * self.beta * q) + wd * wd.transpose() * (8.0 * self.beta)
    }
}

fn main() -> mfemskin::Result<()> {
    let (mesh, skeleton) = BeamSpec::default().build()?;
    let materials = MaterialTable::homogeneous(Stiffening { mu: 1e3, beta: 5e3 }, mesh.n_tets());
    let scene = Scene::new(mesh, skeleton, materials, &SceneConfig::default())?;
    assert!(!scene.materials().all_quadratic());

    let poses = bend_animation(8, 90f64.to_radians());
    solve_sequence(&scene, &poses, &ForceSpec::default(), false, |f, sol, report| {
        let energy = scene.materials().energy(scene.mesh().volumes(), &sol.s);
        println!(
            "frame {f}: energy {energy:10.3}, volume change {:+.3}%",
            report.volume_change_percent
        );
        Ok(())
    })?;
    Ok(())
}
