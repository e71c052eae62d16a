use std::path::Path;
use std::process::{Command, Output};

use mfemskin::demo::{write_demo_assets, BeamSpec};
use mfemskin::rig::PoseFrame;

fn mfemskin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mfemskin"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn demo_beam_writes_frames() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("demo");
    let run = mfemskin(&["demo-beam", "--out", path(&out), "--frames", "4", "--validate"]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let stdout = String::from_utf8(run.stdout).unwrap();
    assert!(stdout.starts_with("model,vertices,tets,k_s,sec_per_frame"));
    for f in 0..4 {
        assert!(out.join("frames").join(format!("frame_{f:04}.obj")).is_file());
    }
    assert!(out.join("frames/validation.json").is_file());
}

#[test]
fn run_solves_written_assets() {
    let dir = tempfile::tempdir().unwrap();
    write_demo_assets(dir.path(), &BeamSpec::default(), &[PoseFrame::identity(3)]).unwrap();
    let out = dir.path().join("out");
    let run = mfemskin(&[
        "run",
        "--mesh",
        path(&dir.path().join("beam.mesh")),
        "--rig",
        path(&dir.path().join("rig.json")),
        "--clustering",
        "hierarchy",
        "--out",
        path(&out),
    ]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(out.join("frame_0000.obj").is_file());
    assert!(out.join("timing.csv").is_file());
}

#[test]
fn missing_input_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let run = mfemskin(&[
        "run",
        "--mesh",
        path(&dir.path().join("nope.mesh")),
        "--rig",
        path(&dir.path().join("nope.json")),
        "--out",
        path(&dir.path().join("out")),
    ]);
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn malformed_mesh_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    write_demo_assets(dir.path(), &BeamSpec::default(), &[PoseFrame::identity(3)]).unwrap();
    std::fs::write(
        dir.path().join("beam.mesh"),
        "MeshVersionFormatted 1\nVertices\nbanana\n",
    )
    .unwrap();
    let run = mfemskin(&[
        "run",
        "--mesh",
        path(&dir.path().join("beam.mesh")),
        "--rig",
        path(&dir.path().join("rig.json")),
        "--out",
        path(&dir.path().join("out")),
    ]);
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn overflowing_pose_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let mut pose = PoseFrame::identity(3);
    pose.root_translation.x = 1e308;
    write_demo_assets(dir.path(), &BeamSpec::default(), &[pose]).unwrap();
    let run = mfemskin(&[
        "run",
        "--mesh",
        path(&dir.path().join("beam.mesh")),
        "--rig",
        path(&dir.path().join("rig.json")),
        "--out",
        path(&dir.path().join("out")),
    ]);
    assert_eq!(run.status.code(), Some(3), "{}", String::from_utf8_lossy(&run.stderr));
}

#[test]
fn bad_arguments_are_rejected() {
    let run = mfemskin(&["demo-beam"]);
    assert_eq!(run.status.code(), Some(2));
}
