//! The closed loop: sensors, perception, decision and motion, one tick at
//! a time.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::rng::CountingRng;
use super::scenario::{Scenario, ScenarioScript, Task};
use super::sensors::{body_box, emit_observations, BodyDetection, SensorState};
use super::world::{agent_truth, AgentTruth, SEATED_HEIGHT, STANDING_HEIGHT};
use crate::association::{MatchCandidate, PersonManager, PersonManagerConfig};
use crate::geometry::{Pose2, Vec2};
use crate::groups::{detect_groups, GcffParams};
use crate::nav::{
    build_cost_field, forward_model, plan, plan_route, subgoal, Control, CostField, CostParams, NavError, OccupancyGrid, PersonState,
    PlannerConfig, RouteConfig, SocialScene,
};
use crate::scene::{BodyObservation, EntityId, EntityKind, ImageSize, PersonRecord, RobotState, SceneSnapshot};
use crate::supervisor::{face_point, InteractionState, Phase, RobotAction, Supervisor, SupervisorConfig};
use crate::tracker::{Camera, DoaMeasurement, TrackStatus, TrackSummary, Tracker, TrackerConfig};

/// Stage names in the order every tick runs them.
pub const STAGES: [&str; 9] = ["advance", "observe", "track", "associate", "group", "field", "supervise", "plan", "act"];

/// Every tunable of a run, logged with the first tick.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub dt: f64,
    pub camera: Camera,
    pub image: ImageSize,
    pub tracker: TrackerConfig,
    pub groups: GcffParams,
    pub cost: CostParams,
    pub planner: PlannerConfig,
    pub route: RouteConfig,
    pub supervisor: SupervisorConfig,
    /// How long the robot talks per utterance, seconds.
    pub utterance_duration: f64,
    /// Distance at which a goto task counts as done.
    pub goal_tolerance: f64,
    /// Turn rate gain when only turning towards someone.
    pub face_gain: f64,
    /// How long someone who left the camera's view still shapes the cost
    /// field, seconds.
    pub social_memory: f64,
    /// Tracked speeds below this are treated as standing still, m/s.
    pub walking_speed: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dt: 0.1,
            camera: Camera::default(),
            image: ImageSize::default(),
            tracker: TrackerConfig::default(),
            groups: GcffParams::default(),
            cost: CostParams::default(),
            planner: PlannerConfig::default(),
            route: RouteConfig::default(),
            supervisor: SupervisorConfig::default(),
            utterance_duration: 1.5,
            goal_tolerance: 0.1,
            face_gain: 2.0,
            social_memory: 5.0,
            walking_speed: 0.2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanSummary {
    pub goal: Option<Vec2>,
    /// Point on the route the controller steered to.
    pub subgoal: Option<Vec2>,
    pub route: Vec<Vec2>,
    /// The control applied this tick.
    pub control: Control,
    pub cost: Option<f64>,
    pub braking_cost: Option<f64>,
    pub predicted: Vec<Pose2>,
    /// No feasible plan: the base was stopped.
    pub stopped: bool,
    pub goal_reached: bool,
}

/// One record of the JSONL log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TickLog {
    pub tick: u64,
    pub time: f64,
    pub truth: Vec<AgentTruth>,
    pub detections: Vec<BodyDetection>,
    pub candidates: Vec<MatchCandidate>,
    pub tracks: Vec<TrackSummary>,
    pub snapshot: SceneSnapshot,
    /// The people and group centres the plan was made around.
    pub social: SocialScene,
    pub supervisor: InteractionState,
    pub actions: Vec<RobotAction>,
    pub plan: PlanSummary,
    /// Robot pose after applying the control.
    pub robot_after: Pose2,
    pub stages: Vec<String>,
    pub rng_draws: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<RunConfig>,
    /// The script as run, with the seed actually used. First tick only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub script: Option<ScenarioScript>,
}

#[derive(Clone, Debug, Default)]
struct TrackMeta {
    orientation: f64,
    seated: bool,
}

/// A running simulation. Stepping is the only way state advances.
#[derive(Clone, Debug)]
pub struct Simulation {
    pub script: ScenarioScript,
    pub grid: OccupancyGrid,
    pub config: RunConfig,
    seed: u64,
    rng: CountingRng,
    sensors: SensorState,
    tracker: Tracker,
    manager: PersonManager,
    supervisor: Supervisor,
    robot: RobotState,
    tick: u64,
    previous: Option<Vec<Control>>,
    speaking_until: f64,
    goal_reached: bool,
    look_at: Option<EntityId>,
    /// Where the look target was last seen.
    look_point: Option<Vec2>,
    meta: BTreeMap<EntityId, TrackMeta>,
    remembered: BTreeMap<EntityId, (PersonState, f64)>,
    last: Option<TickLog>,
}

impl Simulation {
    pub fn new(scenario: &Scenario, seed: Option<u64>) -> Self {
        Self::with_config(scenario, seed, RunConfig::default())
    }

    pub fn with_config(scenario: &Scenario, seed: Option<u64>, mut config: RunConfig) -> Self {
        let script = scenario.script.clone();
        let seed = seed.unwrap_or(script.seed);
        config.supervisor.interactive = matches!(script.task, Task::Interact);
        Self {
            rng: CountingRng::new(seed),
            sensors: SensorState::default(),
            tracker: Tracker::new(config.tracker),
            manager: PersonManager::new(PersonManagerConfig::default()),
            supervisor: Supervisor::new(config.supervisor),
            robot: RobotState { pose: script.robot, ..Default::default() },
            tick: 0,
            previous: None,
            speaking_until: f64::NEG_INFINITY,
            goal_reached: false,
            look_at: None,
            look_point: None,
            meta: BTreeMap::new(),
            remembered: BTreeMap::new(),
            last: None,
            grid: scenario.grid.clone(),
            script,
            config,
            seed,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn time(&self) -> f64 {
        self.tick as f64 * self.config.dt
    }

    pub fn robot(&self) -> &RobotState {
        &self.robot
    }

    pub fn last(&self) -> Option<&TickLog> {
        self.last.as_ref()
    }

    /// Number of ticks in a full run: the scripted duration at the tick rate.
    pub fn total_ticks(&self) -> u64 {
        (self.script.duration / self.config.dt).round() as u64
    }

    pub fn finished(&self) -> bool {
        self.tick >= self.total_ticks()
    }

    /// Ground truth at the current time.
    pub fn truth(&self) -> Vec<AgentTruth> {
        let t = self.time();
        self.script.agents.iter().map(|a| agent_truth(a, t, self.robot.pose.position())).collect()
    }

    /// Applies new planner and social-space settings from the next tick on.
    pub fn set_cost_params(&mut self, cost: CostParams, planner: PlannerConfig) {
        self.config.cost = cost;
        self.config.planner = planner;
    }

    /// Sends the robot to a new point. Interactions are no longer started.
    pub fn set_goal(&mut self, goal: Vec2) {
        self.script.task = Task::Goto { x: goal.x, y: goal.y };
        self.goal_reached = false;
        self.config.supervisor.interactive = false;
        self.supervisor.cfg.interactive = false;
    }

    /// Rebuilds the field a log record was planned on.
    pub fn field_for(&self, social: &SocialScene) -> CostField {
        build_cost_field(social, &self.grid, &self.config.cost)
    }

    pub fn step(&mut self) -> TickLog {
        let cfg = self.config.clone();
        let dt = cfg.dt;
        let time = self.time();
        let tick = self.tick;
        self.robot.speaking = time < self.speaking_until - 1e-9;

        let truth = self.truth();
        let obs = emit_observations(
            &self.script.agents,
            &truth,
            &self.robot,
            &cfg.camera,
            cfg.image,
            &self.script.sensors,
            &mut self.sensors,
            tick,
            time,
            &mut self.rng,
        );

        let detections: Vec<_> = obs.detections.iter().map(BodyDetection::to_detection).collect();
        let doas: Vec<DoaMeasurement> =
            obs.voices.iter().map(|v| DoaMeasurement { voice: v.id.clone(), doa: v.doa, reliable: v.reliable }).collect();
        let tracked = self.tracker.step(&detections, &doas, &self.robot.pose, time, dt);
        let by_source: BTreeMap<&EntityId, &BodyDetection> = obs.detections.iter().map(|d| (&d.source, d)).collect();
        for t in self.tracker.tracks() {
            if let Some(d) = t.last_source.as_ref().and_then(|s| by_source.get(s)) {
                self.meta.insert(t.id.clone(), TrackMeta { orientation: d.orientation, seated: d.seated });
            }
        }
        let live: BTreeSet<&EntityId> = self.tracker.tracks().iter().map(|t| &t.id).collect();
        self.meta.retain(|id, _| live.contains(id));

        let mut bodies = Vec::new();
        let mut source_to_body: BTreeMap<EntityId, EntityId> = BTreeMap::new();
        for t in self.tracker.tracks().iter().filter(|t| t.status == TrackStatus::Confirmed) {
            let meta = self.meta.get(&t.id).cloned().unwrap_or_default();
            let height = if meta.seated { SEATED_HEIGHT } else { STANDING_HEIGHT };
            let local = self.robot.pose.to_local(t.position());
            let Some((bbox, feet)) = body_box(&cfg.camera, cfg.image, local, height) else { continue };
            if let Some(s) = &t.last_source {
                source_to_body.insert(s.clone(), t.id.clone());
            }
            bodies.push(BodyObservation {
                id: t.id.clone(),
                bbox,
                feet_pixel: feet,
                ground_pos: Some(t.position()),
                orientation: Some(meta.orientation),
                embedding: t.embedding.clone(),
            });
        }
        bodies.sort_by(|a, b| a.id.cmp(&b.id));
        let body_ids: BTreeSet<EntityId> = bodies.iter().map(|b| b.id.clone()).collect();

        let mut candidates: Vec<MatchCandidate> = obs
            .candidates
            .iter()
            .filter_map(|c| source_to_body.get(&c.b).map(|b| MatchCandidate::new(c.a.clone(), b.clone(), c.likelihood, c.time)))
            .collect();
        candidates.extend(tracked.candidates.into_iter().filter(|c| body_ids.contains(&c.a)));
        for c in &candidates {
            self.manager.submit(c).expect("sensor candidates are admissible");
        }
        let alive: BTreeSet<EntityId> = obs
            .faces
            .iter()
            .map(|f| f.id.clone())
            .chain(body_ids.iter().cloned())
            .chain(obs.voices.iter().map(|v| v.id.clone()))
            .collect();
        let partition = self.manager.resolve(time, &alive);
        let persons: Vec<PersonRecord> = partition.persons;
        let stale: Vec<EntityId> = persons
            .iter()
            .flat_map(|p| p.features())
            .filter(|f| !alive.contains(*f))
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();

        let mut snapshot = SceneSnapshot {
            time,
            image: cfg.image,
            faces: obs.faces.clone(),
            bodies,
            voices: obs.voices.clone(),
            persons,
            groups: Vec::new(),
            robot: self.robot,
            stale,
        };
        let posed: Vec<(EntityId, Pose2)> =
            snapshot.persons.iter().filter_map(|p| snapshot.person_pose(&p.id).map(|q| (p.id.clone(), q))).collect();
        snapshot.groups = detect_groups(&posed, &cfg.groups);

        let mut persons: BTreeMap<EntityId, PersonState> = snapshot
            .persons
            .iter()
            .filter_map(|p| {
                let body = p.body.as_ref()?;
                let pose = snapshot.person_pose(&p.id)?;
                let track = self.tracker.track(body)?;
                let seated = self.meta.get(body).is_some_and(|m| m.seated);
                // Standing people jitter; only walking stretches their space.
                let v = track.velocity();
                let velocity = if v.norm() >= cfg.walking_speed { v } else { Vec2::ZERO };
                Some((body.clone(), PersonState { pose, velocity, seated }))
            })
            .collect();
        for (id, state) in &persons {
            self.remembered.insert(id.clone(), (*state, time));
        }
        // People who just left the camera's view are kept where they were
        // last seen for a while, so the robot does not cut through them.
        self.remembered.retain(|_, (_, seen)| time - *seen <= cfg.social_memory + 1e-9);
        for (id, (state, _)) in &self.remembered {
            let local = self.robot.pose.to_local(state.pose.position());
            let height = if state.seated { SEATED_HEIGHT } else { STANDING_HEIGHT };
            if !persons.contains_key(id) && body_box(&cfg.camera, cfg.image, local, height).is_none() {
                persons.insert(id.clone(), PersonState { velocity: Vec2::ZERO, ..*state });
            }
        }
        let social = SocialScene {
            persons: persons.into_values().collect(),
            groups: snapshot.groups.iter().filter(|g| g.members.len() >= 2).map(|g| g.center).collect(),
        };
        let field = build_cost_field(&social, &self.grid, &cfg.cost);

        let actions = self.supervisor.step(&snapshot, &field, time);
        for a in &actions {
            match a {
                RobotAction::Speak { .. } => self.speaking_until = time + cfg.utterance_duration,
                RobotAction::Face { target } => self.look_at = Some(target.clone()),
                _ => {}
            }
        }
        if self.supervisor.state.phase == Phase::Idle {
            self.look_at = None;
            self.look_point = None;
        }
        if let Some(p) = self.look_at.as_ref().and_then(|t| face_point(&snapshot, t)) {
            self.look_point = Some(p);
        }

        let here = self.robot.pose.position();
        if let Some(g) = self.script.goal() {
            if here.dist(g) <= cfg.goal_tolerance {
                self.goal_reached = true;
            }
        }
        let goal = match self.supervisor.state.phase {
            Phase::Approaching => self.supervisor.goal().map(|p| p.position()),
            Phase::Idle if !self.goal_reached => self.script.goal(),
            _ => None,
        };

        // Joining a group means entering the edge of its o-space, so its
        // own cost must not hold the robot back.
        let joining = match (&self.supervisor.state.phase, &self.supervisor.state.target) {
            (Phase::Approaching, Some(t)) if t.kind == EntityKind::Group => snapshot.group(t).map(|g| g.center),
            _ => None,
        };
        let (social, field) = match joining {
            Some(c) => {
                let mut s = social;
                s.groups.retain(|g| *g != c);
                let f = build_cost_field(&s, &self.grid, &cfg.cost);
                (s, f)
            }
            None => (social, field),
        };

        let mut summary = PlanSummary {
            goal,
            subgoal: None,
            route: Vec::new(),
            control: Control::STOP,
            cost: None,
            braking_cost: None,
            predicted: Vec::new(),
            stopped: false,
            goal_reached: self.goal_reached,
        };
        match goal {
            Some(g) => match {
                // Without a route the controller heads straight for the goal.
                let here = self.robot.pose.position();
                summary.route = plan_route(&field, here, g, &cfg.route).unwrap_or_default();
                let target = subgoal(&summary.route, cfg.route.lookahead).unwrap_or(g);
                summary.subgoal = Some(target);
                plan(self.robot.pose, target, &field, &cfg.planner, self.previous.as_deref())
            } {
                Ok(p) => {
                    summary.control = p.first();
                    summary.cost = Some(p.cost);
                    summary.braking_cost = Some(p.braking_cost);
                    summary.predicted = p.predicted.clone();
                    self.previous = Some(p.sequence.controls);
                }
                Err(NavError::NoFeasiblePlan) => {
                    summary.stopped = true;
                    self.previous = None;
                }
                Err(e) => panic!("planner rejected its own configuration: {e}"),
            },
            None => {
                self.previous = None;
                if let Some(p) = self.look_point {
                    let bearing = self.robot.pose.bearing_to(p);
                    let w = (cfg.face_gain * bearing).clamp(-cfg.planner.omega_max, cfg.planner.omega_max);
                    if bearing.abs() > 0.05 {
                        summary.control = Control::new(0.0, w);
                    }
                }
            }
        }

        let u = summary.control;
        self.robot.pose = forward_model(self.robot.pose, u, dt);
        self.robot.v = u.v;
        self.robot.omega = u.omega;

        let log = TickLog {
            tick,
            time,
            truth,
            detections: obs.detections,
            candidates,
            tracks: self.tracker.tracks().iter().map(|t| t.summary()).collect(),
            snapshot,
            social,
            supervisor: self.supervisor.state.clone(),
            actions,
            plan: summary,
            robot_after: self.robot.pose,
            stages: STAGES.iter().map(|s| s.to_string()).collect(),
            rng_draws: self.rng.draws(),
            config: (tick == 0).then(|| cfg.clone()),
            script: (tick == 0).then(|| ScenarioScript { seed: self.seed, ..self.script.clone() }),
        };
        self.tick += 1;
        self.last = Some(log.clone());
        log
    }

    /// Steps until the scripted duration is over.
    pub fn run_to_end(&mut self) -> Vec<TickLog> {
        let mut logs = Vec::new();
        while !self.finished() {
            logs.push(self.step());
        }
        logs
    }
}

/// Runs a scenario start to finish.
pub fn run(scenario: &Scenario, seed: Option<u64>) -> Vec<TickLog> {
    Simulation::new(scenario, seed).run_to_end()
}

/// One JSON object per line.
pub fn to_jsonl(logs: &[TickLog]) -> String {
    let mut out = String::new();
    for l in logs {
        out.push_str(&serde_json::to_string(l).expect("tick logs serialise"));
        out.push('\n');
    }
    out
}

pub fn parse_jsonl(text: &str) -> Result<Vec<TickLog>, serde_json::Error> {
    text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect()
}
