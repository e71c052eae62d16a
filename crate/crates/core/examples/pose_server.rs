//! Serve the demo beam and drive it with a few poses over the websocket.
//!
//!     cargo run --example pose_server            # self-test, then exit
//!     cargo run --example pose_server -- 8080    # keep serving on :8080

use std::net::SocketAddr;
use std::sync::Arc;

use futures_util::{SinkExt, StreamExt};
use tokio_tungstenite::tungstenite::Message;

use mfemskin::demo::{bend_pose, BeamSpec};
use mfemskin::materials::{Material, MaterialTable};
use mfemskin::rig::FrameSpec;
use mfemskin::service::{decode_positions, spawn, SceneSession};
use mfemskin::{Scene, SceneConfig};

#[tokio::main]
async fn main() -> mfemskin::Result<()> {
    let port: Option<u16> = std::env::args().nth(1).and_then(|p| p.parse().ok());
    let (mesh, skeleton) = BeamSpec::default().build()?;
    let materials = MaterialTable::homogeneous(Material::arap(1e3)?, mesh.n_tets());
    let session = Arc::new(SceneSession::new(Scene::new(
        mesh,
        skeleton,
        materials,
        &SceneConfig::default(),
    )?));
    let addr = SocketAddr::from(([127, 0, 0, 1], port.unwrap_or(0)));
    let (addr, server) = spawn(session, addr).await?;
    println!("serving on http://{addr} (GET /scene, WS /pose)");
    if port.is_some() {
        return server.await.expect("server task");
    }

    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/pose"))
        .await
        .expect("websocket connect");
    for (seq, degrees) in [(1u64, 0.0f64), (2, 45.0), (3, 90.0)] {
        let frame = FrameSpec::from_pose(&bend_pose(degrees.to_radians()));
        let msg =
            serde_json::json!({ "seq": seq, "root_translation": frame.root_translation, "rotations": frame.rotations });
        ws.send(Message::Text(msg.to_string().into())).await.expect("send");
        // binary vertex buffer, then the JSON report
        let Some(Ok(Message::Binary(bytes))) = ws.next().await else {
            panic!("expected vertex buffer")
        };
        let (reply_seq, positions) = decode_positions(&bytes).expect("well-formed frame");
        let Some(Ok(Message::Text(report))) = ws.next().await else {
            panic!("expected report")
        };
        let report: serde_json::Value = serde_json::from_str(&report)?;
        println!(
            "seq {reply_seq}: {} surface vertices, solved in {:.2} ms",
            positions.len() / 3,
            1e3 * report["report"]["total_seconds"].as_f64().unwrap_or(0.0)
        );
    }
    Ok(())
}
