use std::path::PathBuf;
use std::sync::atomic::Ordering;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use futures_util::StreamExt;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use sse_core::geometry::Vec2;
use sse_core::sim::{load_scenario, Scenario, Simulation, TickLog};
use sse_playground::{router, ControlReply, Engine, FieldView, Frame, Params, SceneView};

fn scenario(name: &str) -> Scenario {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    load_scenario(&dir.join(format!("{name}.json"))).unwrap()
}

fn app(name: &str) -> (Router, Engine) {
    let engine = Engine::spawn(scenario(name), None);
    (router(engine.clone()), engine)
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<&str>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

async fn post<T: serde::de::DeserializeOwned>(app: &Router, uri: &str, body: Value) -> T {
    let (status, v) = call(app, "POST", uri, Some(&body.to_string())).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    serde_json::from_value(v).unwrap()
}

async fn step(app: &Router, count: u64) -> Frame {
    let r: ControlReply = post(app, "/control", json!({"action": "step", "count": count})).await;
    r.frame.unwrap()
}

fn frame_matches_log(f: &Frame, l: &TickLog) {
    assert_eq!(f.tick, l.tick);
    assert_eq!(f.snapshot, l.snapshot);
    assert_eq!(f.plan, l.plan);
    assert_eq!(f.truth, l.truth);
    assert_eq!(f.robot, l.robot_after);
    assert_eq!(f.supervisor, l.supervisor);
}

fn clearance(f: &Frame, agent: &str) -> f64 {
    let p = f.truth.iter().find(|a| a.id == agent).unwrap().pose.position();
    f.plan.predicted.iter().map(|q| q.position().dist(p)).fold(f64::INFINITY, f64::min)
}

#[tokio::test]
async fn fresh_scene_shows_scripted_agents_at_time_zero() {
    let (app, _) = app("conversation");
    let (status, v) = call(&app, "GET", "/scene", None).await;
    assert_eq!(status, StatusCode::OK);
    let s: SceneView = serde_json::from_value(v).unwrap();
    assert_eq!((s.tick, s.time, s.playing), (0, 0.0, false));
    assert!(s.snapshot.is_none());
    let ids: Vec<&str> = s.agents.iter().map(|a| a.id.as_str()).collect();
    assert_eq!(ids, ["ana", "ben"]);
    assert!(s.agents[0].pose.position().dist(Vec2::new(2.5, 0.6)) < 1e-12);
    assert_eq!(s.goal, Some(Vec2::new(5.0, 0.0)));
}

#[tokio::test]
async fn field_layers_have_map_dimensions() {
    let (app, _) = app("blocking");
    for layer in ["social", "obstacle", "group", "total"] {
        let (status, v) = call(&app, "GET", &format!("/field?layer={layer}"), None).await;
        assert_eq!(status, StatusCode::OK);
        let f: FieldView = serde_json::from_value(v).unwrap();
        assert_eq!((f.width, f.height, f.values.len()), (100, 70, 7000));
    }
    let before: FieldView = serde_json::from_value(call(&app, "GET", "/field?layer=social", None).await.1).unwrap();
    assert!(before.values.iter().all(|v| *v == Some(0.0)));
    // The person is confirmed after a few ticks and then shapes the field.
    step(&app, 5).await;
    let after: FieldView = serde_json::from_value(call(&app, "GET", "/field", None).await.1).unwrap();
    assert!(after.version > before.version);
    assert_eq!(call(&app, "GET", "/field?layer=heat", None).await.0, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn moved_agent_shows_up_in_the_next_frame_with_a_new_plan() {
    let (plain, _) = app("blocking");
    let (edited, _) = app("blocking");
    step(&plain, 3).await;
    step(&edited, 3).await;
    let s: SceneView = post(&edited, "/edit", json!({"op": "move_agent", "id": "carl", "x": 1.0, "y": 1.2})).await;
    assert!(s.agents[0].pose.position().dist(Vec2::new(1.0, 1.2)) < 1e-12);

    let (a, b) = (step(&plain, 1).await, step(&edited, 1).await);
    assert_eq!(b.tick, 3);
    assert!(b.truth[0].pose.position().dist(Vec2::new(1.0, 1.2)) < 1e-12);
    assert!(a.truth[0].pose.position().dist(Vec2::new(1.0, 0.0)) < 1e-12);
    assert_ne!(a.plan.predicted, b.plan.predicted);
}

#[tokio::test]
async fn raising_social_weight_keeps_or_widens_clearance() {
    let (base, _) = app("blocking");
    let (tuned, _) = app("blocking");
    step(&base, 8).await;
    step(&tuned, 8).await;
    let p: Params = post(&tuned, "/params", json!({"planner": {"w_social": 20.0}})).await;
    assert_eq!(p.planner.w_social, 20.0);
    assert_eq!(p.cost, sse_core::nav::CostParams::default());
    let (_, got) = call(&tuned, "GET", "/params", None).await;
    assert_eq!(serde_json::from_value::<Params>(got).unwrap(), p);

    let (a, b) = (step(&base, 1).await, step(&tuned, 1).await);
    assert!(clearance(&b, "carl") >= clearance(&a, "carl") - 1e-9, "{} vs {}", clearance(&b, "carl"), clearance(&a, "carl"));
}

#[tokio::test]
async fn bad_parameters_are_rejected_and_change_nothing() {
    let (app, _) = app("blocking");
    let before: Params = serde_json::from_value(call(&app, "GET", "/params", None).await.1).unwrap();
    for patch in [
        json!({"planner": {"w_sociall": 3.0}}),
        json!({"cost": {"social": {"sigma_front": -1.0}}}),
        json!({"planner": {"steps": 0}}),
        json!({"cost": {"obstacle_peak": null}}),
    ] {
        let (status, v) = call(&app, "POST", "/params", Some(&patch.to_string())).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{patch}");
        assert!(v["error"].is_string());
    }
    assert_eq!(call(&app, "POST", "/params", Some("{")).await.0, StatusCode::BAD_REQUEST);
    let after: Params = serde_json::from_value(call(&app, "GET", "/params", None).await.1).unwrap();
    assert_eq!(before, after);
}

#[tokio::test]
async fn stepping_while_paused_equals_a_free_run() {
    let (app, _) = app("multiparty");
    let mut sim = Simulation::new(&scenario("multiparty"), None);
    let logs: Vec<TickLog> = (0..30).map(|_| sim.step()).collect();
    let mut frames = Vec::new();
    for _ in 0..10 {
        frames.push(step(&app, 1).await);
    }
    frames.push(step(&app, 20).await);
    for (f, k) in frames.iter().zip((0..10).chain([29])) {
        frame_matches_log(f, &logs[k]);
    }
}

#[tokio::test]
async fn play_runs_ticks_until_paused() {
    let (app, _) = app("crossing");
    let r: ControlReply = post(&app, "/control", json!({"action": "play"})).await;
    assert!(r.playing);
    tokio::time::sleep(Duration::from_millis(450)).await;
    let r: ControlReply = post(&app, "/control", json!({"action": "pause"})).await;
    assert!(!r.playing);
    assert!(r.tick >= 2, "{} ticks", r.tick);
    let mut sim = Simulation::new(&scenario("crossing"), None);
    let logs: Vec<TickLog> = (0..r.tick).map(|_| sim.step()).collect();
    frame_matches_log(&r.frame.unwrap(), logs.last().unwrap());
    tokio::time::sleep(Duration::from_millis(250)).await;
    let s: SceneView = serde_json::from_value(call(&app, "GET", "/scene", None).await.1).unwrap();
    assert_eq!(s.tick, r.tick);
}

#[tokio::test]
async fn reset_reproduces_the_first_frame() {
    let (app, _) = app("crossing");
    let first = step(&app, 1).await;
    let later = step(&app, 5).await;
    post::<Value>(&app, "/edit", json!({"op": "remove_agent", "id": "eli"})).await;
    let r: ControlReply = post(&app, "/control", json!({"action": "reset"})).await;
    assert_eq!((r.tick, r.frame), (0, None));
    // Only the field version, a change counter, moves on.
    let again = step(&app, 1).await;
    assert_eq!(again, Frame { field_version: again.field_version, ..first.clone() });

    post::<Value>(&app, "/control", json!({"action": "reset", "seed": 8})).await;
    // Detections are noisy, so a new seed shows once people are in view.
    assert_ne!(step(&app, 6).await.snapshot, later.snapshot);
}

#[tokio::test]
async fn edits_change_the_scene_and_invalid_ones_are_refused() {
    let (app, engine) = app("conversation");
    let s: SceneView = post(&app, "/edit", json!({"op": "add_agent", "id": "cy", "x": 1.5, "y": -1.0})).await;
    assert_eq!(s.agents.len(), 3);
    post::<Value>(&app, "/edit", json!({"op": "set_speaking", "id": "cy", "speaking": true})).await;
    post::<Value>(&app, "/edit", json!({"op": "set_seated", "id": "ana", "seated": true})).await;
    post::<Value>(&app, "/edit", json!({"op": "set_orientation", "id": "ben", "theta": 0.5})).await;
    let s: SceneView = post(&app, "/edit", json!({"op": "move_goal", "x": 4.0, "y": 1.0})).await;
    assert_eq!(s.goal, Some(Vec2::new(4.0, 1.0)));
    let f = step(&app, 1).await;
    let cy = f.truth.iter().find(|a| a.id == "cy").unwrap();
    assert!(cy.speaking);
    assert!(f.truth.iter().find(|a| a.id == "ana").unwrap().seated);
    assert!((f.truth.iter().find(|a| a.id == "ben").unwrap().pose.theta - 0.5).abs() < 1e-12);
    assert_eq!(f.plan.goal, Some(Vec2::new(4.0, 1.0)));

    post::<Value>(&app, "/edit", json!({"op": "set_speaking", "id": "cy", "speaking": false})).await;
    let f = step(&app, 1).await;
    assert!(!f.truth.iter().find(|a| a.id == "cy").unwrap().speaking);
    let s: SceneView = post(&app, "/edit", json!({"op": "remove_agent", "id": "ben"})).await;
    assert_eq!(s.agents.len(), 2);

    for bad in [
        json!({"op": "move_agent", "id": "nobody", "x": 1.0, "y": 1.0}),
        json!({"op": "move_agent", "id": "ana", "x": 50.0, "y": 0.0}),
        json!({"op": "move_agent", "id": "ana", "x": -1.2, "y": 2.5}),
        json!({"op": "add_agent", "id": "ana", "x": 1.0, "y": 1.0}),
        json!({"op": "teleport", "id": "ana"}),
        json!({"op": "move_goal", "x": 1.0}),
    ] {
        let (status, _) = call(&app, "POST", "/edit", Some(&bad.to_string())).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{bad}");
    }
    assert_eq!(call(&app, "POST", "/control", Some(r#"{"action":"step","count":0}"#)).await.0, StatusCode::BAD_REQUEST);

    engine.busy.store(true, Ordering::SeqCst);
    let (status, _) = call(&app, "POST", "/edit", Some(r#"{"op":"set_seated","id":"ana","seated":false}"#)).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(call(&app, "POST", "/params", Some("{}")).await.0, StatusCode::CONFLICT);
    engine.busy.store(false, Ordering::SeqCst);
}

#[tokio::test]
async fn stream_pushes_frames_and_the_field_only_on_change() {
    let (app, _) = app("empty_goal");
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let served = app.clone();
    tokio::spawn(async move { axum::serve(listener, served).await });
    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/stream")).await.unwrap();

    let mut next = async || -> Frame {
        let msg = tokio::time::timeout(Duration::from_secs(5), ws.next()).await.unwrap().unwrap().unwrap();
        serde_json::from_str(msg.to_text().unwrap()).unwrap()
    };
    let stepped = step(&app, 1).await;
    let first = next().await;
    assert_eq!(first.tick, 0);
    assert_eq!(first.plan, stepped.plan);
    let field = first.field.as_ref().expect("first frame carries the field");
    assert_eq!((field.width, field.height), (100, 70));

    step(&app, 1).await;
    let second = next().await;
    assert_eq!(second.tick, 1);
    assert_eq!(second.field_version, first.field_version);
    assert!(second.field.is_none());
}
