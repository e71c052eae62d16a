use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use mfemskin::demo::{bend_animation, write_demo_assets, BeamSpec};
use mfemskin::pipeline::{run_pipeline, RunConfig};
use mfemskin::rig::ClusterStrategy;
use mfemskin::scene::DEFAULT_PIN_STIFFNESS;
use mfemskin::service::{serve, SceneSession};
use mfemskin::{Error, Result};

#[derive(Parser)]
#[command(
    name = "mfemskin",
    version,
    about = "Skin a tetrahedral character from its rig, one sparse solve per frame"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve every frame of an animation and export surface OBJs.
    Run {
        #[command(flatten)]
        scene: SceneArgs,
        /// JSON loads: {"constant": [{"vertex", "force"}], "frames": [[...]]}
        #[arg(long)]
        forces: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Cross-check each frame against the uncondensed system.
        #[arg(long)]
        validate: bool,
    },
    /// Serve a scene over HTTP and websocket. Without --mesh, serves the demo beam.
    Serve {
        #[command(flatten)]
        scene: OptionalSceneArgs,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
    /// Write the procedural beam scene and solve its bend animation.
    DemoBeam {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, num_args = 3, default_values_t = [8, 2, 2])]
        cells: Vec<usize>,
        #[arg(long, default_value_t = 11)]
        frames: usize,
        /// Final bend of the middle joint, in degrees.
        #[arg(long, default_value_t = 100.0)]
        angle: f64,
        #[arg(long)]
        validate: bool,
    },
}

#[derive(Args)]
struct SceneArgs {
    /// MEDIT .mesh file.
    #[arg(long)]
    mesh: PathBuf,
    /// Skeleton and animation JSON.
    #[arg(long)]
    rig: PathBuf,
    #[command(flatten)]
    options: SceneOptions,
}

#[derive(Args)]
struct OptionalSceneArgs {
    #[arg(long, requires = "rig")]
    mesh: Option<PathBuf>,
    #[arg(long, requires = "mesh")]
    rig: Option<PathBuf>,
    #[command(flatten)]
    options: SceneOptions,
}

#[derive(Args)]
struct SceneOptions {
    /// Material JSON; ARAP with mu = 1000 when omitted.
    #[arg(long)]
    material: Option<PathBuf>,
    /// bone | joint | hierarchy | user
    #[arg(long, default_value = "bone")]
    clustering: ClusterStrategy,
    /// Per-tet bone table for --clustering user.
    #[arg(long)]
    user_table: Option<PathBuf>,
    /// Defaults to 1.5 × mean surface edge length.
    #[arg(long)]
    pin_radius: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_PIN_STIFFNESS)]
    ks: f64,
}

impl SceneOptions {
    fn config(&self, mesh: PathBuf, rig: PathBuf, out: PathBuf) -> RunConfig {
        RunConfig {
            material: self.material.clone(),
            clustering: self.clustering,
            user_table: self.user_table.clone(),
            pin_radius: self.pin_radius,
            pin_stiffness: self.ks,
            ..RunConfig::new(mesh, rig, out)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run {
            scene,
            forces,
            out,
            validate,
        } => {
            let config = RunConfig {
                forces,
                validate,
                ..scene.options.config(scene.mesh, scene.rig, out)
            };
            let summary = run_pipeline(&config)?;
            print!("{}", mfemskin::pipeline::emit_timing_table(&[summary.timing]));
            Ok(())
        }
        Command::Serve { scene, port, host } => {
            let session = match (scene.mesh, scene.rig) {
                (Some(mesh), Some(rig)) => {
                    let config = scene.options.config(mesh, rig, PathBuf::new());
                    SceneSession::new(config.load_scene()?.0)
                }
                _ => {
                    let dir = std::env::temp_dir().join(format!("mfemskin-demo-{}", std::process::id()));
                    write_demo_assets(&dir, &BeamSpec::default(), &[])?;
                    let config = scene
                        .options
                        .config(dir.join("beam.mesh"), dir.join("rig.json"), PathBuf::new());
                    SceneSession::new(config.load_scene()?.0)
                }
            };
            let addr: SocketAddr = format!("{host}:{port}")
                .parse()
                .map_err(|e| Error::Config(format!("bad address {host}:{port}: {e}")))?;
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async move {
                let listener = tokio::net::TcpListener::bind(addr).await?;
                log::info!("listening on http://{}", listener.local_addr()?);
                serve(Arc::new(session), listener).await
            })
        }
        Command::DemoBeam {
            out,
            cells,
            frames,
            angle,
            validate,
        } => {
            // half-unit cubes, so the default 8×2×2 grid is 4 × 1 × 1
            let cells = [cells[0], cells[1], cells[2]];
            let spec = BeamSpec::new(cells, cells.map(|c| 0.5 * c as f64));
            write_demo_assets(&out, &spec, &bend_animation(frames, angle.to_radians()))?;
            let config = RunConfig {
                material: Some(out.join("material.json")),
                validate,
                ..RunConfig::new(out.join("beam.mesh"), out.join("rig.json"), out.join("frames"))
            };
            let summary = run_pipeline(&config)?;
            print!("{}", mfemskin::pipeline::emit_timing_table(&[summary.timing]));
            Ok(())
        }
    }
}
