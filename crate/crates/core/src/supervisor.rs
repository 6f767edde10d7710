//! Interaction state machine.
//!
//! One interaction episode at a time: notice someone who keeps looking at
//! the robot, walk over, hold the conversation while they stay, say
//! goodbye. The robot never listens while it talks.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::geometry::{Pose2, Vec2};
use crate::nav::{approach_pose, ApproachTarget, CostField};
use crate::scene::{EntityId, EntityKind, SceneSnapshot};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupervisorConfig {
    /// A person counts as facing the robot when the robot lies within this
    /// angle of their heading, radians.
    pub facing_angle: f64,
    pub engage_range: f64,
    /// How long someone must keep facing the robot before it approaches.
    pub t_engage: f64,
    /// How long every participant may be away before the robot leaves.
    pub t_leave: f64,
    /// Radius of the interaction circle around the target.
    pub r_int: f64,
    /// Distance to the approach pose that counts as arrived.
    pub arrival_tolerance: f64,
    /// When false the robot never starts an interaction; used while it
    /// runs errands.
    #[serde(default = "yes")]
    pub interactive: bool,
}

fn yes() -> bool {
    true
}

impl Default for SupervisorConfig {
    fn default() -> Self {
        Self {
            facing_angle: 30f64.to_radians(),
            engage_range: 4.0,
            t_engage: 2.0,
            t_leave: 3.0,
            r_int: 1.2,
            arrival_tolerance: 0.25,
            interactive: true,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    #[default]
    Idle,
    Approaching,
    Engaged,
    Disengaging,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InteractionState {
    pub phase: Phase,
    /// Person or group; present exactly when the phase is not idle.
    pub target: Option<EntityId>,
    pub entered_at: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RobotAction {
    NavigateTo { pose: Pose2 },
    Face { target: EntityId },
    /// Opaque utterance tag; no dialogue content.
    Speak { utterance: String },
    Listen,
    Wave,
    Point { direction: f64 },
    Stop,
}

impl RobotAction {
    pub fn speak(tag: &str) -> Self {
        Self::Speak { utterance: tag.to_string() }
    }

    pub fn is_speak(&self) -> bool {
        matches!(self, Self::Speak { .. })
    }
}

/// True if the action set is half-duplex: never speak and listen together.
pub fn half_duplex(actions: &[RobotAction]) -> bool {
    !(actions.iter().any(RobotAction::is_speak) && actions.contains(&RobotAction::Listen))
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Supervisor {
    pub cfg: SupervisorConfig,
    pub state: InteractionState,
    /// Since when each person has continuously faced the robot.
    dwell: BTreeMap<EntityId, f64>,
    participants: BTreeSet<EntityId>,
    away_since: Option<f64>,
    speaker: Option<EntityId>,
    voiced: BTreeSet<EntityId>,
    goal: Option<Pose2>,
}

impl Supervisor {
    pub fn new(cfg: SupervisorConfig) -> Self {
        Self { cfg, ..Default::default() }
    }

    /// Current approach pose while approaching.
    pub fn goal(&self) -> Option<Pose2> {
        self.goal
    }

    pub fn participants(&self) -> &BTreeSet<EntityId> {
        &self.participants
    }

    fn enter(&mut self, phase: Phase, target: Option<EntityId>, now: f64) {
        self.state = InteractionState { phase, target, entered_at: now };
    }

    fn facing_robot(&self, s: &SceneSnapshot, person: &EntityId) -> bool {
        let Some(pose) = s.person_pose(person) else { return false };
        let oriented = s.person(person).and_then(|p| p.body.as_ref()).and_then(|b| s.body(b)).is_some_and(|b| b.orientation.is_some());
        if !oriented {
            return false;
        }
        let robot = s.robot.pose.position();
        pose.position().dist(robot) <= self.cfg.engage_range && pose.bearing_to(robot).abs() < self.cfg.facing_angle
    }

    /// Persons a target stands for.
    fn members(s: &SceneSnapshot, target: &EntityId) -> BTreeSet<EntityId> {
        match target.kind {
            EntityKind::Group => s.group(target).map(|g| g.members.clone()).unwrap_or_default(),
            _ if s.person(target).is_some() => BTreeSet::from([target.clone()]),
            _ => BTreeSet::new(),
        }
    }

    /// The group a person belongs to when it has company, else the person.
    fn target_for(s: &SceneSnapshot, person: &EntityId) -> EntityId {
        match s.group_of(person) {
            Some(g) if g.members.len() >= 2 => g.id.clone(),
            _ => person.clone(),
        }
    }

    /// Follows the target through regrouping: if it vanished but a
    /// participant is still here, retarget to where they are now. False
    /// when nobody from the interaction is in the scene.
    fn refresh_target(&mut self, s: &SceneSnapshot) -> bool {
        let Some(target) = self.state.target.clone() else { return false };
        let live = Self::members(s, &target);
        if !live.is_empty() {
            if target.kind == EntityKind::Person {
                // A lone target may have joined a group.
                let t = Self::target_for(s, &target);
                if t != target {
                    self.state.target = Some(t.clone());
                    self.participants = Self::members(s, &t);
                    return true;
                }
            }
            self.participants = live;
            return true;
        }
        if let Some(p) = self.participants.iter().find(|p| s.person(p).is_some()).cloned() {
            let t = Self::target_for(s, &p);
            self.participants = Self::members(s, &t);
            self.state.target = Some(t);
            return true;
        }
        false
    }

    fn approach_goal(&self, s: &SceneSnapshot, field: &CostField) -> Option<Pose2> {
        let target = ApproachTarget::from_snapshot(s, self.state.target.as_ref()?)?;
        approach_pose(&target, s.robot.pose.position(), field, self.cfg.r_int).ok()
    }

    /// Participants currently speaking, by voice activity.
    fn active_speakers(&self, s: &SceneSnapshot) -> BTreeSet<EntityId> {
        self.participants
            .iter()
            .filter(|p| {
                s.person(p).and_then(|r| r.voice.as_ref()).and_then(|v| s.voice(v)).is_some_and(|v| v.active)
            })
            .cloned()
            .collect()
    }

    fn within_range(&self, s: &SceneSnapshot, p: &EntityId) -> bool {
        s.person_pose(p).is_some_and(|q| q.position().dist(s.robot.pose.position()) <= self.cfg.engage_range)
    }

    pub fn step(&mut self, s: &SceneSnapshot, field: &CostField, now: f64) -> Vec<RobotAction> {
        // Facing dwell is tracked in every phase so it is ready when idle.
        let facing: BTreeSet<EntityId> = s.persons.iter().map(|p| p.id.clone()).filter(|p| self.facing_robot(s, p)).collect();
        self.dwell.retain(|p, _| facing.contains(p));
        for p in &facing {
            self.dwell.entry(p.clone()).or_insert(now);
        }

        let mut actions = Vec::new();
        match self.state.phase {
            Phase::Idle => {
                let ready = self
                    .dwell
                    .iter()
                    .filter(|_| self.cfg.interactive)
                    .filter(|(_, &since)| now - since.max(self.state.entered_at) >= self.cfg.t_engage - 1e-9)
                    .min_by(|a, b| a.1.total_cmp(b.1).then_with(|| a.0.cmp(b.0)))
                    .map(|(p, _)| p.clone());
                if let Some(person) = ready {
                    let target = Self::target_for(s, &person);
                    self.participants = Self::members(s, &target);
                    self.enter(Phase::Approaching, Some(target.clone()), now);
                    self.goal = self.approach_goal(s, field);
                    match self.goal {
                        Some(pose) => actions.push(RobotAction::NavigateTo { pose }),
                        None => actions.push(RobotAction::Stop),
                    }
                    actions.push(RobotAction::Face { target });
                }
            }
            Phase::Approaching => {
                if !self.refresh_target(s) {
                    // Lost from view: hold still and wait for them.
                    if now - *self.away_since.get_or_insert(now) >= self.cfg.t_leave - 1e-9 {
                        return self.disengage(now);
                    }
                    let target = self.state.target.clone().expect("approaching has a target");
                    return vec![RobotAction::Stop, RobotAction::Face { target }];
                }
                self.away_since = None;
                if let Some(goal) = self.approach_goal(s, field) {
                    self.goal = Some(goal);
                }
                let target = self.state.target.clone().expect("approaching has a target");
                match self.goal {
                    Some(goal) if goal.position().dist(s.robot.pose.position()) <= self.cfg.arrival_tolerance => {
                        self.goal = None;
                        self.away_since = None;
                        self.speaker = None;
                        self.voiced.clear();
                        self.enter(Phase::Engaged, Some(target.clone()), now);
                        actions.push(RobotAction::Stop);
                        actions.push(RobotAction::Face { target });
                        if !s.robot.speaking {
                            actions.push(RobotAction::speak("greeting"));
                        }
                    }
                    Some(pose) => {
                        actions.push(RobotAction::NavigateTo { pose });
                        actions.push(RobotAction::Face { target });
                    }
                    None => {
                        actions.push(RobotAction::Stop);
                        actions.push(RobotAction::Face { target });
                    }
                }
            }
            Phase::Engaged => {
                let found = self.refresh_target(s);
                let present = found && self.participants.iter().any(|p| self.within_range(s, p));
                if present {
                    self.away_since = None;
                } else if now - *self.away_since.get_or_insert(now) >= self.cfg.t_leave - 1e-9 {
                    return self.disengage(now);
                }
                let active = self.active_speakers(s);
                if !self.speaker.as_ref().is_some_and(|p| active.contains(p)) {
                    if let Some(p) = active.iter().next() {
                        self.speaker = Some(p.clone());
                    }
                }
                if self.speaker.as_ref().is_some_and(|p| !self.participants.contains(p)) {
                    self.speaker = None;
                }
                let look = self.speaker.clone().unwrap_or_else(|| self.state.target.clone().expect("engaged has a target"));
                actions.push(RobotAction::Face { target: look });
                // Take the turn when someone finishes speaking.
                let finished = self.voiced.iter().any(|p| !active.contains(p));
                self.voiced = active;
                if !s.robot.speaking {
                    if finished && self.voiced.is_empty() {
                        actions.push(RobotAction::speak("reply"));
                    } else {
                        actions.push(RobotAction::Listen);
                    }
                }
            }
            Phase::Disengaging => {
                self.participants.clear();
                self.speaker = None;
                self.enter(Phase::Idle, None, now);
            }
        }
        debug_assert!(half_duplex(&actions));
        actions
    }

    fn disengage(&mut self, now: f64) -> Vec<RobotAction> {
        let target = self.state.target.clone();
        self.goal = None;
        self.away_since = None;
        self.enter(Phase::Disengaging, target, now);
        vec![RobotAction::Stop, RobotAction::speak("farewell"), RobotAction::Wave]
    }
}

/// Where the robot should look for a face action, if the target is visible.
pub fn face_point(s: &SceneSnapshot, target: &EntityId) -> Option<Vec2> {
    match target.kind {
        EntityKind::Group => s.group(target).map(|g| g.center),
        _ => s.person_pose(target).map(|p| p.position()),
    }
}
