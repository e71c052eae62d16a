use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;

use mfemskin::demo::{bend_pose, BeamSpec};
use mfemskin::materials::{Material, MaterialTable};
use mfemskin::pipeline::{solve_sequence, ForceSpec};
use mfemskin::service::{decode_positions, spawn, surface_buffer, PoseRequest, SceneSession};
use mfemskin::{Scene, SceneConfig};

type Socket = tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<TcpStream>>;

fn demo_scene() -> Scene {
    let (mesh, skel) = BeamSpec::default().build().unwrap();
    let table = MaterialTable::homogeneous(Material::Arap { mu: 1e3 }, mesh.n_tets());
    Scene::new(mesh, skel, table, &SceneConfig::default()).unwrap()
}

async fn start(session: SceneSession) -> SocketAddr {
    let (addr, _) = spawn(Arc::new(session), "127.0.0.1:0".parse().unwrap()).await.unwrap();
    addr
}

async fn http_get(addr: SocketAddr, path: &str) -> (u16, serde_json::Value) {
    let mut stream = TcpStream::connect(addr).await.unwrap();
    let request = format!("GET {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n");
    stream.write_all(request.as_bytes()).await.unwrap();
    let mut raw = Vec::new();
    stream.read_to_end(&mut raw).await.unwrap();
    let text = String::from_utf8(raw).unwrap();
    let status: u16 = text.split_whitespace().nth(1).unwrap().parse().unwrap();
    let (head, body) = text.split_once("\r\n\r\n").unwrap();
    assert!(!head.to_ascii_lowercase().contains("transfer-encoding: chunked"));
    (status, serde_json::from_str(body).unwrap())
}

async fn connect(addr: SocketAddr) -> Socket {
    let (ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/pose"))
        .await
        .unwrap();
    ws
}

fn pose_message(seq: u64, angle: f64) -> Message {
    let pose = bend_pose(angle);
    let request = PoseRequest {
        seq,
        root_translation: [0.0; 3],
        rotations: pose.rotations.iter().map(|q| [q.w, q.i, q.j, q.k]).collect(),
    };
    Message::text(serde_json::to_string(&request).unwrap())
}

enum Reply {
    Positions(u64, Vec<f32>, Vec<u8>),
    Text(serde_json::Value),
}

async fn next(ws: &mut Socket) -> Reply {
    let msg = tokio::time::timeout(Duration::from_secs(30), ws.next())
        .await
        .expect("reply timed out")
        .unwrap()
        .unwrap();
    match msg {
        Message::Binary(b) => {
            let (seq, p) = decode_positions(&b).unwrap();
            Reply::Positions(seq, p, b.to_vec())
        }
        Message::Text(t) => Reply::Text(serde_json::from_str(&t).unwrap()),
        other => panic!("unexpected {other:?}"),
    }
}

/// Binary frame followed by its report.
async fn solved(ws: &mut Socket) -> (u64, Vec<f32>, Vec<u8>) {
    let Reply::Positions(seq, p, bytes) = next(ws).await else {
        panic!("expected positions")
    };
    let Reply::Text(report) = next(ws).await else {
        panic!("expected report")
    };
    assert_eq!(report["seq"].as_u64(), Some(seq));
    assert!(report["report"]["total_seconds"].as_f64().is_some());
    (seq, p, bytes)
}

#[tokio::test]
async fn scene_endpoint_describes_the_mesh() {
    let addr = start(SceneSession::new(demo_scene())).await;
    let (status, body) = http_get(addr, "/scene").await;
    assert_eq!(status, 200);
    assert_eq!(body["vertices"], 81);
    assert_eq!(body["tets"], 192);
    assert_eq!(body["joints"].as_array().unwrap().len(), 3);
    let n_surface = body["surface_vertices"].as_array().unwrap().len();
    for f in body["surface_faces"].as_array().unwrap() {
        assert!(f
            .as_array()
            .unwrap()
            .iter()
            .all(|i| (i.as_u64().unwrap() as usize) < n_surface));
    }
}

#[tokio::test]
async fn empty_session_is_not_found() {
    let addr = start(SceneSession::empty()).await;
    let (status, body) = http_get(addr, "/scene").await;
    assert_eq!(status, 404);
    assert!(body["error"].as_str().unwrap().contains("no scene"));
}

#[tokio::test]
async fn identity_pose_returns_rest_surface() {
    let scene = demo_scene();
    let rest = surface_buffer(&scene, &scene.mesh().rest_positions());
    let addr = start(SceneSession::new(scene)).await;
    let mut ws = connect(addr).await;
    ws.send(pose_message(1, 0.0)).await.unwrap();
    let (seq, p, _) = solved(&mut ws).await;
    assert_eq!(seq, 1);
    assert_eq!(p.len(), rest.len());
    let d = p.iter().zip(&rest).fold(0.0f32, |m, (a, b)| m.max((a - b).abs()));
    assert!(d < 1e-5, "{d}");
}

#[tokio::test]
async fn repeated_pose_gives_identical_bytes() {
    let addr = start(SceneSession::new(demo_scene())).await;
    let mut ws = connect(addr).await;
    ws.send(pose_message(7, 0.8)).await.unwrap();
    let (_, _, a) = solved(&mut ws).await;
    ws.send(pose_message(7, 0.8)).await.unwrap();
    let (_, _, b) = solved(&mut ws).await;
    assert_eq!(a, b);
}

#[tokio::test]
async fn bad_message_keeps_connection_alive() {
    let addr = start(SceneSession::new(demo_scene())).await;
    let mut ws = connect(addr).await;
    ws.send(Message::text(r#"{"seq": 3, "rotations": "nope"}"#))
        .await
        .unwrap();
    let Reply::Text(err) = next(&mut ws).await else {
        panic!("expected error")
    };
    assert_eq!(err["seq"], 3);
    assert!(err["message"].as_str().is_some());
    // wrong joint count is rejected by the solver, not the parser
    ws.send(Message::text(r#"{"seq": 4, "rotations": [[1,0,0,0]]}"#))
        .await
        .unwrap();
    let Reply::Text(err) = next(&mut ws).await else {
        panic!("expected error")
    };
    assert_eq!(err["seq"], 4);
    ws.send(pose_message(5, 0.3)).await.unwrap();
    let (seq, _, _) = solved(&mut ws).await;
    assert_eq!(seq, 5);
}

#[tokio::test]
async fn burst_is_coalesced_to_latest() {
    let (mesh, skel) = BeamSpec::new([16, 4, 4], [4.0, 1.0, 1.0]).build().unwrap();
    let table = MaterialTable::homogeneous(Material::Arap { mu: 1e3 }, mesh.n_tets());
    let session = Arc::new(SceneSession::new(
        Scene::new(mesh, skel, table, &SceneConfig::default()).unwrap(),
    ));
    let (addr, _) = spawn(Arc::clone(&session), "127.0.0.1:0".parse().unwrap())
        .await
        .unwrap();
    let mut ws = connect(addr).await;
    let burst = 40u64;
    for seq in 1..=burst {
        ws.send(pose_message(seq, seq as f64 * 0.02)).await.unwrap();
    }
    let mut seen = Vec::new();
    loop {
        let (seq, _, _) = solved(&mut ws).await;
        seen.push(seq);
        if seq == burst {
            break;
        }
    }
    assert!(seen.windows(2).all(|w| w[0] < w[1]), "{seen:?}");
    assert_eq!(*seen.last().unwrap(), burst);
    assert!(session.solve_count() <= burst);
}

#[tokio::test]
async fn websocket_matches_batch_pipeline_bit_for_bit() {
    let angle = 90f64.to_radians();
    let batch = demo_scene();
    let mut expected = Vec::new();
    solve_sequence(
        &batch,
        &[bend_pose(angle)],
        &ForceSpec::default(),
        false,
        |_, sol, _| {
            expected = surface_buffer(&batch, &sol.positions);
            Ok(())
        },
    )
    .unwrap();

    let addr = start(SceneSession::new(demo_scene())).await;
    let mut ws = connect(addr).await;
    ws.send(pose_message(90, angle)).await.unwrap();
    let (_, got, _) = solved(&mut ws).await;
    assert_eq!(got.len(), expected.len());
    assert!(got.iter().zip(&expected).all(|(a, b)| a.to_bits() == b.to_bits()));
}
