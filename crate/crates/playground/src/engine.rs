//! The worker that owns the simulation. Everything that touches engine
//! state runs here, one command at a time, between ticks.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{mpsc, Arc};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use tokio::sync::{oneshot, watch};

use sse_core::geometry::{Pose2, Vec2};
use sse_core::nav::{build_cost_field, CostField, CostParams, FieldLayer, PlannerConfig, SocialScene};
use sse_core::scene::{GroupRecord, RobotState, SceneSnapshot};
use sse_core::sim::{
    AgentScript, AgentTruth, OrientationPolicy, PlanSummary, Scenario, Simulation, TickLog, Waypoint,
};
use sse_core::supervisor::{InteractionState, RobotAction};

/// Ticks per second while playing.
pub const TICK_RATE: f64 = 10.0;

/// Longest run a single step request may ask for.
pub const MAX_STEPS: u64 = 10_000;

/// One pushed update: the tick's perception, plan and supervisor state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub tick: u64,
    pub time: f64,
    pub truth: Vec<AgentTruth>,
    pub snapshot: SceneSnapshot,
    pub groups: Vec<GroupRecord>,
    pub plan: PlanSummary,
    pub robot: Pose2,
    pub supervisor: InteractionState,
    pub actions: Vec<RobotAction>,
    /// Version of the cost field this tick was planned on.
    pub field_version: u64,
    /// Present only when the field changed since the client's last frame.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<Arc<FieldFrame>>,
}

impl Frame {
    fn from_log(log: &TickLog, field_version: u64) -> Self {
        Self {
            tick: log.tick,
            time: log.time,
            truth: log.truth.clone(),
            snapshot: log.snapshot.clone(),
            groups: log.snapshot.groups.clone(),
            plan: log.plan.clone(),
            robot: log.robot_after,
            supervisor: log.supervisor.clone(),
            actions: log.actions.clone(),
            field_version,
            field: None,
        }
    }
}

/// Every layer of the cost field, row-major from the map origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldFrame {
    pub version: u64,
    pub width: usize,
    pub height: usize,
    pub resolution: f64,
    pub origin: Vec2,
    pub obstacle: Vec<f64>,
    pub social: Vec<f64>,
    pub group: Vec<f64>,
    pub total: Vec<f64>,
}

impl FieldFrame {
    fn new(f: &CostField, version: u64) -> Self {
        Self {
            version,
            width: f.grid.width,
            height: f.grid.height,
            resolution: f.grid.resolution,
            origin: f.grid.origin,
            obstacle: f.obstacle.clone(),
            social: f.social.clone(),
            group: f.group.clone(),
            total: f.total.clone(),
        }
    }
}

/// One layer of the field. Blocked cells are `null`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldView {
    pub layer: FieldLayer,
    pub version: u64,
    pub width: usize,
    pub height: usize,
    pub resolution: f64,
    pub origin: Vec2,
    pub values: Vec<Option<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneView {
    pub tick: u64,
    pub time: f64,
    pub playing: bool,
    pub robot: RobotState,
    pub goal: Option<Vec2>,
    /// Where the scripted agents are now.
    pub agents: Vec<AgentTruth>,
    /// The last tick's perceived scene; absent before the first tick.
    pub snapshot: Option<SceneSnapshot>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub cost: CostParams,
    pub planner: PlannerConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Edit {
    /// Faces the robot unless `theta` is given.
    AddAgent {
        id: String,
        x: f64,
        y: f64,
        theta: Option<f64>,
        #[serde(default)]
        seated: bool,
    },
    MoveAgent { id: String, x: f64, y: f64 },
    RemoveAgent { id: String },
    SetOrientation { id: String, theta: f64 },
    SetSeated { id: String, seated: bool },
    SetSpeaking { id: String, speaking: bool },
    MoveGoal { x: f64, y: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case", deny_unknown_fields)]
pub enum Control {
    Play,
    Pause,
    Step {
        #[serde(default = "one")]
        count: u64,
    },
    /// Back to the loaded scenario, optionally with another seed.
    Reset { seed: Option<u64> },
}

fn one() -> u64 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlReply {
    pub playing: bool,
    pub tick: u64,
    /// The newest frame, if any tick has run.
    pub frame: Option<Frame>,
}

pub(crate) enum Command {
    Scene(oneshot::Sender<SceneView>),
    Field(FieldLayer, oneshot::Sender<FieldView>),
    Edit(Edit, oneshot::Sender<Result<SceneView, String>>),
    Params(Value, oneshot::Sender<Result<Params, String>>),
    Current(oneshot::Sender<Params>),
    Control(Control, oneshot::Sender<Result<ControlReply, String>>),
}

/// Handle to a running worker. Cheap to clone.
#[derive(Clone)]
pub struct Engine {
    pub(crate) commands: mpsc::Sender<Command>,
    /// Set while a tick is being computed.
    pub busy: Arc<AtomicBool>,
    pub(crate) frames: watch::Receiver<Option<Frame>>,
    pub(crate) fields: watch::Receiver<Arc<FieldFrame>>,
}

impl Engine {
    /// Starts the worker thread for `scenario`. It stops once every handle
    /// is dropped.
    pub fn spawn(scenario: Scenario, seed: Option<u64>) -> Self {
        let (commands, rx) = mpsc::channel();
        let busy = Arc::new(AtomicBool::new(false));
        let mut worker = Worker::new(scenario, seed, busy.clone());
        let (frame_tx, frames) = watch::channel(None);
        let (field_tx, fields) = watch::channel(Arc::new(FieldFrame::new(&worker.field, worker.version)));
        worker.frame_tx = Some(frame_tx);
        worker.field_tx = Some(field_tx);
        std::thread::Builder::new()
            .name("sse-engine".into())
            .spawn(move || worker.run(rx))
            .expect("engine thread starts");
        Self { commands, busy, frames, fields }
    }

    pub(crate) async fn ask<T>(&self, make: impl FnOnce(oneshot::Sender<T>) -> Command) -> Option<T> {
        let (tx, rx) = oneshot::channel();
        self.commands.send(make(tx)).ok()?;
        rx.await.ok()
    }

    pub async fn scene(&self) -> Option<SceneView> {
        self.ask(Command::Scene).await
    }

    pub async fn field(&self, layer: FieldLayer) -> Option<FieldView> {
        self.ask(|tx| Command::Field(layer, tx)).await
    }

    pub async fn edit(&self, edit: Edit) -> Option<Result<SceneView, String>> {
        self.ask(|tx| Command::Edit(edit, tx)).await
    }

    /// Applies a JSON merge patch to the current [`Params`].
    pub async fn params(&self, patch: Value) -> Option<Result<Params, String>> {
        self.ask(|tx| Command::Params(patch, tx)).await
    }

    pub async fn current_params(&self) -> Option<Params> {
        self.ask(Command::Current).await
    }

    pub async fn control(&self, c: Control) -> Option<Result<ControlReply, String>> {
        self.ask(|tx| Command::Control(c, tx)).await
    }

    /// Latest frame and field, for streaming.
    pub fn subscribe(&self) -> (watch::Receiver<Option<Frame>>, watch::Receiver<Arc<FieldFrame>>) {
        (self.frames.clone(), self.fields.clone())
    }
}

struct Worker {
    scenario: Scenario,
    sim: Simulation,
    field: CostField,
    version: u64,
    playing: bool,
    busy: Arc<AtomicBool>,
    frame_tx: Option<watch::Sender<Option<Frame>>>,
    field_tx: Option<watch::Sender<Arc<FieldFrame>>>,
}

impl Worker {
    fn new(scenario: Scenario, seed: Option<u64>, busy: Arc<AtomicBool>) -> Self {
        let sim = Simulation::new(&scenario, seed);
        let field = sim.field_for(&SocialScene::default());
        Self { scenario, sim, field, version: 0, playing: false, busy, frame_tx: None, field_tx: None }
    }

    fn run(mut self, rx: mpsc::Receiver<Command>) {
        let period = Duration::from_secs_f64(1.0 / TICK_RATE);
        let mut deadline = Instant::now() + period;
        loop {
            let cmd = if self.playing {
                match rx.recv_timeout(deadline.saturating_duration_since(Instant::now())) {
                    Ok(c) => Some(c),
                    Err(mpsc::RecvTimeoutError::Timeout) => None,
                    Err(mpsc::RecvTimeoutError::Disconnected) => return,
                }
            } else {
                match rx.recv() {
                    Ok(c) => {
                        deadline = Instant::now() + period;
                        Some(c)
                    }
                    Err(_) => return,
                }
            };
            match cmd {
                Some(c) => self.handle(c),
                None => {
                    self.step();
                    deadline += period;
                    let now = Instant::now();
                    if deadline < now {
                        deadline = now + period;
                    }
                }
            }
        }
    }

    fn handle(&mut self, cmd: Command) {
        // A dropped receiver only means the client went away.
        match cmd {
            Command::Scene(tx) => {
                let _ = tx.send(self.scene());
            }
            Command::Field(layer, tx) => {
                let _ = tx.send(self.field_view(layer));
            }
            Command::Edit(e, tx) => {
                let _ = tx.send(self.edit(e).map(|()| self.scene()));
            }
            Command::Params(patch, tx) => {
                let _ = tx.send(self.set_params(patch));
            }
            Command::Current(tx) => {
                let _ = tx.send(self.params());
            }
            Command::Control(c, tx) => {
                let _ = tx.send(self.control(c));
            }
        }
    }

    fn scene(&self) -> SceneView {
        SceneView {
            tick: self.sim.tick(),
            time: self.sim.time(),
            playing: self.playing,
            robot: *self.sim.robot(),
            goal: self.sim.script.goal(),
            agents: self.sim.truth(),
            snapshot: self.sim.last().map(|l| l.snapshot.clone()),
        }
    }

    fn field_view(&self, layer: FieldLayer) -> FieldView {
        let f = &self.field;
        FieldView {
            layer,
            version: self.version,
            width: f.grid.width,
            height: f.grid.height,
            resolution: f.grid.resolution,
            origin: f.grid.origin,
            values: f.layer(layer).iter().map(|v| v.is_finite().then_some(*v)).collect(),
        }
    }

    fn params(&self) -> Params {
        Params { cost: self.sim.config.cost, planner: self.sim.config.planner }
    }

    /// Rebuilds the field around the last planning scene, bumping the
    /// version when anything changed.
    fn refresh_field(&mut self) {
        let social = self.sim.last().map(|l| l.social.clone()).unwrap_or_default();
        let field = build_cost_field(&social, &self.sim.grid, &self.sim.config.cost);
        if field != self.field {
            self.field = field;
            self.version += 1;
            if let Some(tx) = &self.field_tx {
                tx.send_replace(Arc::new(FieldFrame::new(&self.field, self.version)));
            }
        }
    }

    fn step(&mut self) -> Frame {
        self.busy.store(true, Ordering::SeqCst);
        let log = self.sim.step();
        self.refresh_field();
        self.busy.store(false, Ordering::SeqCst);
        let frame = Frame::from_log(&log, self.version);
        if let Some(tx) = &self.frame_tx {
            tx.send_replace(Some(frame.clone()));
        }
        frame
    }

    fn control(&mut self, c: Control) -> Result<ControlReply, String> {
        let mut frame = self.sim.last().map(|l| Frame::from_log(l, self.version));
        match c {
            Control::Play => self.playing = true,
            Control::Pause => self.playing = false,
            Control::Step { count } => {
                if count == 0 || count > MAX_STEPS {
                    return Err(format!("count must lie in 1..={MAX_STEPS}"));
                }
                self.playing = false;
                for _ in 0..count {
                    frame = Some(self.step());
                }
            }
            Control::Reset { seed } => {
                self.playing = false;
                self.sim = Simulation::new(&self.scenario, seed);
                self.refresh_field();
                frame = None;
                if let Some(tx) = &self.frame_tx {
                    tx.send_replace(None);
                }
            }
        }
        Ok(ControlReply { playing: self.playing, tick: self.sim.tick(), frame })
    }

    fn set_params(&mut self, patch: Value) -> Result<Params, String> {
        let current = serde_json::to_value(self.params()).expect("params serialise");
        let mut merged = current;
        merge_patch(&mut merged, &patch);
        let next: Params = serde_json::from_value(merged.clone()).map_err(|e| e.to_string())?;
        // Unknown keys survive the merge but not a round trip.
        if serde_json::to_value(next).expect("params serialise") != merged {
            return Err("unknown parameter in patch".into());
        }
        next.cost.validate().map_err(|e| e.to_string())?;
        next.planner.validate().map_err(|e| e.to_string())?;
        self.sim.set_cost_params(next.cost, next.planner);
        self.refresh_field();
        Ok(next)
    }

    fn free(&self, x: f64, y: f64) -> Result<Vec2, String> {
        let p = Vec2::new(x, y);
        if !(x.is_finite() && y.is_finite()) {
            return Err("coordinates must be finite".into());
        }
        match self.sim.grid.cell_of(p) {
            Some((c, r)) if !self.sim.grid.occupied(c, r) => Ok(p),
            Some(_) => Err(format!("({x}, {y}) is inside an obstacle")),
            None => Err(format!("({x}, {y}) is off the map")),
        }
    }

    fn agent(&mut self, id: &str) -> Result<&mut AgentScript, String> {
        self.sim.script.agents.iter_mut().find(|a| a.id == id).ok_or_else(|| format!("no agent {id:?}"))
    }

    fn edit(&mut self, e: Edit) -> Result<(), String> {
        let before = self.sim.script.clone();
        let now = self.sim.time();
        let result = self.apply(e, now).and_then(|()| self.sim.script.validate().map_err(|e| e.to_string()));
        if result.is_err() {
            self.sim.script = before;
        }
        result
    }

    fn apply(&mut self, e: Edit, now: f64) -> Result<(), String> {
        match e {
            Edit::AddAgent { id, x, y, theta, seated } => {
                let p = self.free(x, y)?;
                if self.sim.script.agents.iter().any(|a| a.id == id) {
                    return Err(format!("agent {id:?} already exists"));
                }
                let seed = self.sim.script.agents.iter().map(|a| a.appearance_seed.max(a.voice_seed)).max().unwrap_or(0) + 1;
                let orientation = match theta {
                    Some(theta) if theta.is_finite() => OrientationPolicy::Fixed { theta },
                    Some(_) => return Err("theta must be finite".into()),
                    None => OrientationPolicy::Robot,
                };
                self.sim.script.agents.push(AgentScript {
                    id,
                    waypoints: vec![Waypoint { t: 0.0, x: p.x, y: p.y }],
                    orientation,
                    seated,
                    speech: vec![],
                    appearance_seed: seed,
                    voice_seed: seed + 1,
                });
            }
            Edit::MoveAgent { id, x, y } => {
                let p = self.free(x, y)?;
                self.agent(&id)?.waypoints = vec![Waypoint { t: 0.0, x: p.x, y: p.y }];
            }
            Edit::RemoveAgent { id } => {
                self.agent(&id)?;
                self.sim.script.agents.retain(|a| a.id != id);
                for g in &mut self.sim.script.groups {
                    g.retain(|m| *m != id);
                }
                self.sim.script.groups.retain(|g| !g.is_empty());
            }
            Edit::SetOrientation { id, theta } => {
                if !theta.is_finite() {
                    return Err("theta must be finite".into());
                }
                self.agent(&id)?.orientation = OrientationPolicy::Fixed { theta };
            }
            Edit::SetSeated { id, seated } => self.agent(&id)?.seated = seated,
            Edit::SetSpeaking { id, speaking } => {
                let a = self.agent(&id)?;
                let mut speech: Vec<[f64; 2]> = a
                    .speech
                    .iter()
                    .filter(|s| s[0] < now)
                    .map(|s| [s[0], s[1].min(now)])
                    .filter(|s| s[1] > s[0])
                    .collect();
                if speaking {
                    speech.push([now, f64::MAX]);
                }
                a.speech = speech;
            }
            Edit::MoveGoal { x, y } => {
                let p = self.free(x, y)?;
                self.sim.set_goal(p);
            }
        }
        Ok(())
    }
}

/// JSON merge patch: objects merge key by key, `null` deletes, anything
/// else replaces.
pub fn merge_patch(target: &mut Value, patch: &Value) {
    match (target, patch) {
        (Value::Object(t), Value::Object(p)) => {
            for (k, v) in p {
                if v.is_null() {
                    t.remove(k);
                } else {
                    merge_patch(t.entry(k.clone()).or_insert(Value::Null), v);
                }
            }
        }
        (t, p) => *t = p.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn merge_patch_merges_deletes_and_replaces() {
        let mut v = json!({"a": {"b": 1, "c": 2}, "d": [1]});
        merge_patch(&mut v, &json!({"a": {"b": 5, "c": null}, "d": 3}));
        assert_eq!(v, json!({"a": {"b": 5}, "d": 3}));
    }

    #[test]
    fn control_messages_parse() {
        assert_eq!(serde_json::from_str::<Control>(r#"{"action":"step"}"#).unwrap(), Control::Step { count: 1 });
        assert_eq!(serde_json::from_str::<Control>(r#"{"action":"reset","seed":4}"#).unwrap(), Control::Reset { seed: Some(4) });
        assert!(serde_json::from_str::<Control>(r#"{"action":"jump"}"#).is_err());
    }
}
