//! Deterministic closed-loop simulator.
//!
//! A scenario script moves agents along waypoints; synthetic sensors turn
//! them into noisy detections, faces and voices, which run through the
//! same perception and planning code the robot uses. Every random draw
//! comes from one seeded stream, so a scenario and a seed fix the log.

mod engine;
mod metrics;
mod render;
mod rng;
mod scenario;
mod sensors;
mod world;

pub use engine::{parse_jsonl, run, to_jsonl, PlanSummary, RunConfig, Simulation, TickLog, STAGES};
pub use metrics::{compute_metrics, match_agents, match_agents_after, seen_agents, Metrics, MATCH_GATE, MATCH_STICKINESS};
pub use render::{contour_segments, render_svg, RenderOptions};
pub use rng::CountingRng;
pub use scenario::{
    load_map, load_scenario, AgentScript, Dropout, OrientationPolicy, Scenario, ScenarioError, ScenarioScript,
    SensorConfig, Task, Waypoint,
};
pub use sensors::{body_box, emit_observations, face_box, BodyDetection, Observations, SensorState, APPEARANCE_DIM};
pub use world::{agent_truth, AgentTruth, SEATED_HEIGHT, STANDING_HEIGHT};
