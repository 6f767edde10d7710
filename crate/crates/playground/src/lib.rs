//! HTTP and websocket front end for tuning a running simulation.
//!
//! One worker thread owns the engine ([`Engine`]). Handlers only send it
//! commands and relay its answers, so edits and parameter changes always
//! land between ticks. Frames are streamed over `/stream` at most ten per
//! second; the cost field rides along only when its version changed.
//!
//! | route | body / query | answer |
//! |---|---|---|
//! | `GET /scene` | | [`SceneView`] |
//! | `GET /field?layer=social\|obstacle\|group\|total` | | [`FieldView`] |
//! | `POST /edit` | [`Edit`] | [`SceneView`] |
//! | `POST /params` | merge patch over [`Params`] | [`Params`] |
//! | `GET /params` | | [`Params`] |
//! | `POST /control` | [`Control`] | [`ControlReply`] |
//! | `GET /stream` | websocket | one [`Frame`] per message |
//!
//! Errors are `{"error": "..."}` with 400 for invalid input and 409 when
//! an edit arrives while a tick is being computed.

mod engine;

use std::sync::atomic::Ordering;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use sse_core::nav::FieldLayer;

pub use engine::{
    merge_patch, Control, ControlReply, Edit, Engine, FieldFrame, FieldView, Frame, Params, SceneView, MAX_STEPS,
    TICK_RATE,
};

pub fn router(engine: Engine) -> Router {
    Router::new()
        .route("/scene", get(scene))
        .route("/field", get(field))
        .route("/edit", axum::routing::post(edit))
        .route("/params", get(current_params).post(params))
        .route("/control", axum::routing::post(control))
        .route("/stream", get(stream))
        .with_state(engine)
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(serde_json::json!({ "error": message.into() }))).into_response()
}

fn gone() -> Response {
    error(StatusCode::SERVICE_UNAVAILABLE, "engine stopped")
}

fn parse<T: DeserializeOwned>(body: &[u8]) -> Result<T, Response> {
    serde_json::from_slice(body).map_err(|e| error(StatusCode::BAD_REQUEST, e.to_string()))
}

fn reply<T: serde::Serialize>(answer: Option<Result<T, String>>) -> Response {
    match answer {
        Some(Ok(v)) => Json(v).into_response(),
        Some(Err(m)) => error(StatusCode::BAD_REQUEST, m),
        None => gone(),
    }
}

fn refuse_mid_tick(engine: &Engine) -> Result<(), Response> {
    if engine.busy.load(Ordering::SeqCst) {
        Err(error(StatusCode::CONFLICT, "a tick is in progress; retry"))
    } else {
        Ok(())
    }
}

async fn scene(State(engine): State<Engine>) -> Response {
    engine.scene().await.map_or_else(gone, |s| Json(s).into_response())
}

#[derive(Deserialize)]
struct FieldQuery {
    layer: Option<String>,
}

async fn field(State(engine): State<Engine>, Query(q): Query<FieldQuery>) -> Response {
    let name = q.layer.unwrap_or_else(|| "total".into());
    let Ok(layer) = serde_json::from_value::<FieldLayer>(serde_json::Value::String(name.clone())) else {
        return error(StatusCode::BAD_REQUEST, format!("unknown layer {name:?}"));
    };
    engine.field(layer).await.map_or_else(gone, |f| Json(f).into_response())
}

async fn edit(State(engine): State<Engine>, body: Bytes) -> Response {
    let e: Edit = match parse(&body) {
        Ok(e) => e,
        Err(r) => return r,
    };
    if let Err(r) = refuse_mid_tick(&engine) {
        return r;
    }
    reply(engine.edit(e).await)
}

async fn current_params(State(engine): State<Engine>) -> Response {
    engine.current_params().await.map_or_else(gone, |p| Json(p).into_response())
}

async fn params(State(engine): State<Engine>, body: Bytes) -> Response {
    let patch: serde_json::Value = match parse(&body) {
        Ok(p) => p,
        Err(r) => return r,
    };
    if let Err(r) = refuse_mid_tick(&engine) {
        return r;
    }
    reply(engine.params(patch).await)
}

async fn control(State(engine): State<Engine>, body: Bytes) -> Response {
    match parse::<Control>(&body) {
        Ok(c) => reply(engine.control(c).await),
        Err(r) => r,
    }
}

async fn stream(State(engine): State<Engine>, ws: WebSocketUpgrade) -> Response {
    ws.on_upgrade(move |socket| push_frames(engine, socket))
}

async fn push_frames(engine: Engine, mut socket: WebSocket) {
    let (mut frames, fields) = engine.subscribe();
    let gap = Duration::from_secs_f64(1.0 / TICK_RATE);
    let mut sent_version = None;
    // The current frame goes out straight away.
    frames.mark_changed();
    loop {
        tokio::select! {
            changed = frames.changed() => {
                if changed.is_err() {
                    return;
                }
            }
            incoming = socket.recv() => match incoming {
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => return,
                Some(Ok(_)) => continue,
            },
        }
        let Some(mut frame) = frames.borrow_and_update().clone() else {
            continue;
        };
        if sent_version != Some(frame.field_version) {
            let field = fields.borrow().clone();
            sent_version = Some(field.version);
            frame.field = Some(field);
        }
        let text = serde_json::to_string(&frame).expect("frames serialise");
        if socket.send(Message::Text(text.into())).await.is_err() {
            return;
        }
        tokio::time::sleep(gap).await;
    }
}

/// Serves `engine` on `addr` until the process ends.
pub async fn serve(engine: Engine, addr: std::net::SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(engine)).await
}
