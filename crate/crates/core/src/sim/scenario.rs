//! Scenario scripts: the room, the people in it and what the robot is
//! asked to do.
//!
//! Scripts are JSON with strict field checking; the map is a separate
//! plain-text occupancy grid referenced by a path relative to the script.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Pose2, Vec2};
use crate::nav::{MapError, OccupancyGrid};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed JSON: {0}")]
    Parse(String),
    #[error("schema violation at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("map {path}: {source}")]
    Map { path: PathBuf, source: MapError },
}

impl ScenarioError {
    fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Schema { path: path.into(), message: message.into() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Waypoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

/// How an agent's facing direction is chosen each tick.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OrientationPolicy {
    /// Along the direction of travel; `theta` while standing still.
    Motion { theta: f64 },
    Fixed { theta: f64 },
    /// Towards the robot.
    Robot,
    Point { x: f64, y: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentScript {
    pub id: String,
    pub waypoints: Vec<Waypoint>,
    pub orientation: OrientationPolicy,
    #[serde(default)]
    pub seated: bool,
    /// `[start, end)` intervals in seconds.
    #[serde(default)]
    pub speech: Vec<[f64; 2]>,
    pub appearance_seed: u64,
    pub voice_seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Dropout {
    pub body: f64,
    pub face: f64,
    pub voice: f64,
}

impl Default for Dropout {
    fn default() -> Self {
        Self { body: 0.0, face: 0.0, voice: 0.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorConfig {
    pub position_sigma: f64,
    pub orientation_sigma_deg: f64,
    pub doa_sigma_deg: f64,
    /// Per-component Gaussian perturbation before renormalising.
    pub embedding_noise: f64,
    pub dropout: Dropout,
    /// Face↔body likelihood is this times the fraction of the face box
    /// inside the body box.
    pub match_scale: f64,
    pub body_range: f64,
    pub face_range: f64,
    /// Faces are detected when the robot is within this angle of where the
    /// person faces.
    pub face_angle_deg: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            position_sigma: 0.03,
            orientation_sigma_deg: 5.0,
            doa_sigma_deg: 3.0,
            embedding_noise: 0.02,
            dropout: Dropout::default(),
            match_scale: 0.9,
            body_range: 8.0,
            face_range: 5.0,
            face_angle_deg: 60.0,
        }
    }
}

impl SensorConfig {
    /// Perfect sensing.
    pub fn noiseless() -> Self {
        Self { position_sigma: 0.0, orientation_sigma_deg: 0.0, doa_sigma_deg: 0.0, embedding_noise: 0.0, ..Self::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Task {
    /// Notice, approach and talk to people.
    Interact,
    /// Drive to a point; interactions are not started.
    Goto { x: f64, y: f64 },
    /// Stay put and watch.
    Observe,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioScript {
    pub name: String,
    /// Occupancy map path, relative to the script file.
    pub map: String,
    pub duration: f64,
    pub seed: u64,
    pub robot: Pose2,
    pub task: Task,
    #[serde(default)]
    pub agents: Vec<AgentScript>,
    #[serde(default)]
    pub sensors: SensorConfig,
    /// Scripted conversational groups, by agent id.
    #[serde(default)]
    pub groups: Vec<Vec<String>>,
}

impl ScenarioScript {
    pub fn goal(&self) -> Option<Vec2> {
        match self.task {
            Task::Goto { x, y } => Some(Vec2::new(x, y)),
            _ => None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let script: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if inner.is_syntax() || inner.is_eof() {
                ScenarioError::Parse(inner.to_string())
            } else {
                ScenarioError::schema(path, inner.to_string())
            }
        })?;
        script.validate()?;
        Ok(script)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(ScenarioError::schema("duration", "must be positive"));
        }
        let s = &self.sensors;
        let nonneg = [
            ("sensors.position_sigma", s.position_sigma),
            ("sensors.orientation_sigma_deg", s.orientation_sigma_deg),
            ("sensors.doa_sigma_deg", s.doa_sigma_deg),
            ("sensors.embedding_noise", s.embedding_noise),
        ];
        for (path, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(ScenarioError::schema(path, "must be non-negative"));
            }
        }
        if !(0.0..1.0).contains(&s.dropout.body) {
            return Err(ScenarioError::schema("sensors.dropout.body", "must lie in [0, 1)"));
        }
        for (path, p) in [("sensors.dropout.face", s.dropout.face), ("sensors.dropout.voice", s.dropout.voice)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(ScenarioError::schema(path, "must lie in [0, 1]"));
            }
        }
        if !(0.0..=1.0).contains(&s.match_scale) {
            return Err(ScenarioError::schema("sensors.match_scale", "must lie in [0, 1]"));
        }
        let mut ids = std::collections::BTreeSet::new();
        for (i, a) in self.agents.iter().enumerate() {
            if !ids.insert(a.id.as_str()) {
                return Err(ScenarioError::schema(format!("agents[{i}].id"), format!("duplicate agent id {:?}", a.id)));
            }
            if a.waypoints.is_empty() {
                return Err(ScenarioError::schema(format!("agents[{i}].waypoints"), "needs at least one waypoint"));
            }
            for (k, w) in a.waypoints.windows(2).enumerate() {
                if w[1].t <= w[0].t {
                    return Err(ScenarioError::schema(
                        format!("agents[{i}].waypoints[{}].t", k + 1),
                        "waypoint times must be strictly increasing",
                    ));
                }
            }
            for (k, span) in a.speech.iter().enumerate() {
                if span[1] <= span[0] {
                    return Err(ScenarioError::schema(format!("agents[{i}].speech[{k}]"), "end must follow start"));
                }
            }
        }
        for (g, members) in self.groups.iter().enumerate() {
            for (k, m) in members.iter().enumerate() {
                if !ids.contains(m.as_str()) {
                    return Err(ScenarioError::schema(format!("groups[{g}][{k}]"), format!("unknown agent {m:?}")));
                }
            }
        }
        Ok(())
    }
}

/// Script plus the map it refers to.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub script: ScenarioScript,
    pub grid: OccupancyGrid,
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: path.to_path_buf(), source })?;
    let script = ScenarioScript::from_json(&text)?;
    let map_path = path.parent().unwrap_or(Path::new(".")).join(&script.map);
    let grid = load_map(&map_path)?;
    Ok(Scenario { script, grid })
}

pub fn load_map(path: &Path) -> Result<OccupancyGrid, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: path.to_path_buf(), source })?;
    OccupancyGrid::parse(&text).map_err(|source| ScenarioError::Map { path: path.to_path_buf(), source })
}
