//! Local pose service: `GET /scene` for bootstrap, `WS /pose` for streaming
//! poses in and solved surface vertices out.
//!
//! Each websocket message is a JSON pose
//! `{"seq": u64, "root_translation": [x, y, z], "rotations": [[w, x, y, z], ...]}`.
//! A successful solve answers with a binary frame
//! `seq: u64 LE | count: u32 LE | count × 3 f32 LE` followed by a text
//! frame `{"seq", "report"}`; failures answer `{"seq", "message"}`. While a
//! solve is running only the newest pose is kept, older pending poses are
//! dropped.

use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;
use tokio::task::JoinHandle;

use crate::error::{Error, Result};
use crate::pipeline::FrameReport;
use crate::rig::{Joint, PoseFrame};
use crate::scene::Scene;

/// Static description sent to clients on connect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneDescription {
    pub vertices: usize,
    pub tets: usize,
    /// Rest positions of the surface vertices, in the order used by pose
    /// replies.
    pub surface_vertices: Vec<[f64; 3]>,
    /// Triangles indexing `surface_vertices`.
    pub surface_faces: Vec<[usize; 3]>,
    pub joints: Vec<Joint>,
    /// `[proximal, distal]` joint pairs.
    pub bones: Vec<[usize; 2]>,
    pub clustering: String,
    /// Tets per bone.
    pub cluster_sizes: Vec<usize>,
    pub pins: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseRequest {
    pub seq: u64,
    #[serde(default)]
    pub root_translation: [f64; 3],
    pub rotations: Vec<[f64; 4]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReply {
    pub seq: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportReply {
    pub seq: u64,
    pub report: FrameReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoseResult {
    pub seq: u64,
    /// Surface vertex positions, 3 per vertex.
    pub positions: Vec<f32>,
    pub report: FrameReport,
}

impl PoseResult {
    /// Wire encoding of the vertex buffer.
    pub fn to_bytes(&self) -> Vec<u8> {
        encode_positions(self.seq, &self.positions)
    }
}

pub fn encode_positions(seq: u64, positions: &[f32]) -> Vec<u8> {
    let count = (positions.len() / 3) as u32;
    let mut out = Vec::with_capacity(12 + 4 * positions.len());
    out.extend_from_slice(&seq.to_le_bytes());
    out.extend_from_slice(&count.to_le_bytes());
    for p in positions {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

/// Inverse of [`encode_positions`].
pub fn decode_positions(bytes: &[u8]) -> Option<(u64, Vec<f32>)> {
    if bytes.len() < 12 {
        return None;
    }
    let seq = u64::from_le_bytes(bytes[0..8].try_into().ok()?);
    let count = u32::from_le_bytes(bytes[8..12].try_into().ok()?) as usize;
    let body = &bytes[12..];
    if body.len() != 12 * count {
        return None;
    }
    let positions = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Some((seq, positions))
}

/// Surface vertex buffer for a full position vector.
pub fn surface_buffer(scene: &Scene, positions: &[f64]) -> Vec<f32> {
    scene
        .mesh()
        .surface()
        .vertices
        .iter()
        .flat_map(|&v| (0..3).map(move |c| positions[3 * v + c] as f32))
        .collect()
}

/// One scene plus a solve lock; solves are serialized.
#[derive(Debug, Default)]
pub struct SceneSession {
    scene: Option<Arc<Scene>>,
    solve_lock: Mutex<()>,
    solves: AtomicU64,
}

impl SceneSession {
    pub fn new(scene: Scene) -> Self {
        SceneSession {
            scene: Some(Arc::new(scene)),
            ..Default::default()
        }
    }

    pub fn empty() -> Self {
        SceneSession::default()
    }

    pub fn scene(&self) -> Result<&Arc<Scene>> {
        self.scene.as_ref().ok_or(Error::NoScene)
    }

    /// Number of solves completed so far.
    pub fn solve_count(&self) -> u64 {
        self.solves.load(Ordering::SeqCst)
    }

    pub fn get_scene(&self) -> Result<SceneDescription> {
        let scene = self.scene()?;
        let mesh = scene.mesh();
        let skel = scene.skeleton();
        Ok(SceneDescription {
            vertices: mesh.n_vertices(),
            tets: mesh.n_tets(),
            surface_vertices: mesh.surface_positions(&mesh.rest_positions()),
            surface_faces: mesh.surface().local_faces.clone(),
            joints: skel.joints().to_vec(),
            bones: skel.bones().iter().map(|b| [b.proximal, b.distal]).collect(),
            clustering: scene.clustering().strategy.to_string(),
            cluster_sizes: scene.clustering().cluster_sizes(skel.n_bones()),
            pins: scene.pins().len(),
        })
    }

    /// Blocking solve of one pose.
    pub fn post_pose(&self, request: &PoseRequest) -> Result<PoseResult> {
        let scene = self.scene()?;
        let pose = PoseFrame::from_wxyz(&request.rotations, request.root_translation)?;
        let _guard = self.solve_lock.lock().unwrap_or_else(|e| e.into_inner());
        let sol = scene.solve(&pose, &[])?;
        let n = self.solves.fetch_add(1, Ordering::SeqCst);
        Ok(PoseResult {
            seq: request.seq,
            positions: surface_buffer(scene, &sol.positions),
            report: FrameReport::new(n as usize, scene, &sol, None),
        })
    }
}

pub fn router(session: Arc<SceneSession>) -> Router {
    Router::new()
        .route("/scene", get(scene_handler))
        .route("/pose", get(pose_handler))
        .with_state(session)
}

/// Serves until the listener fails.
pub async fn serve(session: Arc<SceneSession>, listener: TcpListener) -> Result<()> {
    axum::serve(listener, router(session)).await?;
    Ok(())
}

/// Binds `addr` and serves in a background task, returning the bound address.
pub async fn spawn(session: Arc<SceneSession>, addr: SocketAddr) -> Result<(SocketAddr, JoinHandle<Result<()>>)> {
    let listener = TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    Ok((local, tokio::spawn(serve(session, listener))))
}

async fn scene_handler(State(session): State<Arc<SceneSession>>) -> Response {
    match session.get_scene() {
        Ok(desc) => Json(desc).into_response(),
        Err(e) => {
            let status = match e {
                Error::NoScene => StatusCode::NOT_FOUND,
                _ => StatusCode::INTERNAL_SERVER_ERROR,
            };
            (status, Json(serde_json::json!({ "error": e.to_string() }))).into_response()
        }
    }
}

async fn pose_handler(ws: WebSocketUpgrade, State(session): State<Arc<SceneSession>>) -> Response {
    ws.on_upgrade(move |socket| pose_socket(socket, session))
}

type Solve = JoinHandle<(u64, Result<PoseResult>)>;

async fn pose_socket(mut socket: WebSocket, session: Arc<SceneSession>) {
    let mut pending: Option<PoseRequest> = None;
    let mut inflight: Option<Solve> = None;
    loop {
        if inflight.is_none() {
            if let Some(request) = pending.take() {
                let session = Arc::clone(&session);
                inflight = Some(tokio::task::spawn_blocking(move || {
                    (request.seq, session.post_pose(&request))
                }));
            }
        }
        tokio::select! {
            msg = socket.recv() => {
                let Some(Ok(msg)) = msg else { break };
                match msg {
                    Message::Text(text) => match serde_json::from_str::<PoseRequest>(&text) {
                        Ok(request) => {
                            if let Some(old) = pending.replace(request) {
                                log::debug!("dropping stale pose {}", old.seq);
                            }
                        }
                        Err(e) => {
                            let seq = serde_json::from_str::<serde_json::Value>(&text)
                                .ok()
                                .and_then(|v| v.get("seq").and_then(|s| s.as_u64()))
                                .unwrap_or(0);
                            if send_error(&mut socket, seq, format!("bad pose message: {e}")).await.is_err() {
                                break;
                            }
                        }
                    },
                    Message::Binary(_) => {
                        if send_error(&mut socket, 0, "expected a JSON text message".into()).await.is_err() {
                            break;
                        }
                    }
                    Message::Close(_) => break,
                    _ => {}
                }
            }
            done = async { inflight.as_mut().unwrap().await }, if inflight.is_some() => {
                inflight = None;
                let sent = match done {
                    Ok((_, Ok(result))) => send_result(&mut socket, result).await,
                    Ok((seq, Err(e))) => send_error(&mut socket, seq, e.to_string()).await,
                    Err(e) => send_error(&mut socket, 0, format!("solver task failed: {e}")).await,
                };
                if sent.is_err() {
                    break;
                }
            }
        }
    }
}

async fn send_result(socket: &mut WebSocket, result: PoseResult) -> std::result::Result<(), axum::Error> {
    socket.send(Message::Binary(result.to_bytes().into())).await?;
    let reply = ReportReply {
        seq: result.seq,
        report: result.report,
    };
    let text = serde_json::to_string(&reply).expect("report serializes");
    socket.send(Message::Text(text.into())).await
}

async fn send_error(socket: &mut WebSocket, seq: u64, message: String) -> std::result::Result<(), axum::Error> {
    let text = serde_json::to_string(&ErrorReply { seq, message }).expect("error serializes");
    socket.send(Message::Text(text.into())).await
}
