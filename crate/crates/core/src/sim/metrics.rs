//! Scores a finished run against the script's ground truth.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::engine::TickLog;
use super::scenario::{ScenarioScript, Task};
use crate::association::hungarian_assign;
use crate::nav::{person_cost, PersonState};
use crate::scene::EntityId;
use crate::supervisor::{half_duplex, Phase};

/// Agents further than this from every tracked person count as unseen.
pub const MATCH_GATE: f64 = 0.75;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub ticks: u64,
    /// Mean over agents of the share of matched ticks spent on that
    /// agent's most frequent person id. `None` if no agent was ever seen.
    pub association_accuracy: Option<f64>,
    /// Changes of an agent's matched person id between matched ticks.
    pub id_switches: u64,
    /// Pairwise F1 of "same group" against the scripted groups, summed
    /// over ticks. 1 when there is nothing to find and nothing was found.
    pub group_f1: f64,
    pub min_distance: Option<f64>,
    pub mean_distance: Option<f64>,
    /// Goto: the goal was reached. Interact: an interaction started.
    pub goal_success: Option<bool>,
    /// First time the supervisor was engaged.
    pub time_to_engage: Option<f64>,
    pub path_length: f64,
    /// Largest personal-space cost of any agent at the robot's position.
    pub max_person_cost: f64,
    pub half_duplex_violations: u64,
    /// Ticks where the chosen plan cost more than braking.
    pub braking_violations: u64,
    pub stop_events: u64,
}

/// Keeping last tick's match is worth this much distance, so two agents
/// passing through the same spot do not swap.
pub const MATCH_STICKINESS: f64 = 0.1;

/// Matches ground-truth agents to snapshot persons by position.
pub fn match_agents(log: &TickLog) -> BTreeMap<String, EntityId> {
    match_agents_after(log, &BTreeMap::new())
}

/// Like [`match_agents`], preferring each agent's previous match.
pub fn match_agents_after(log: &TickLog, previous: &BTreeMap<String, EntityId>) -> BTreeMap<String, EntityId> {
    let s = &log.snapshot;
    let persons: Vec<_> = s.persons.iter().filter_map(|p| s.person_pose(&p.id).map(|q| (p.id.clone(), q))).collect();
    if log.truth.is_empty() || persons.is_empty() {
        return BTreeMap::new();
    }
    let cost: Vec<Vec<f64>> = log
        .truth
        .iter()
        .map(|a| {
            persons
                .iter()
                .map(|(id, q)| {
                    let d = q.position().dist(a.pose.position());
                    let keep = if previous.get(&a.id) == Some(id) { MATCH_STICKINESS } else { 0.0 };
                    if d <= MATCH_GATE { d - keep } else { f64::INFINITY }
                })
                .collect()
        })
        .collect();
    let assignment = hungarian_assign(&cost, false).expect("finite distances");
    assignment.pairs().map(|(i, j)| (log.truth[i].id.clone(), persons[j].0.clone())).collect()
}

pub fn compute_metrics(logs: &[TickLog], script: &ScenarioScript) -> Metrics {
    let social = logs.first().and_then(|l| l.config.as_ref()).map(|c| c.cost).unwrap_or_default().social;
    let mut m = Metrics { ticks: logs.len() as u64, ..Default::default() };

    let truth_group: BTreeMap<&str, usize> =
        script.groups.iter().enumerate().flat_map(|(g, ids)| ids.iter().map(move |id| (id.as_str(), g))).collect();
    let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
    let mut history: BTreeMap<String, Vec<EntityId>> = BTreeMap::new();
    let (mut dist_sum, mut dist_n) = (0.0, 0u64);

    let mut last: BTreeMap<String, EntityId> = BTreeMap::new();
    for log in logs {
        let matched = match_agents_after(log, &last);
        for (agent, person) in &matched {
            history.entry(agent.clone()).or_default().push(person.clone());
            last.insert(agent.clone(), person.clone());
        }
        let detected_group = |person: &EntityId| {
            log.snapshot.group_of(person).filter(|g| g.members.len() >= 2).map(|g| g.id.clone())
        };
        let agents: Vec<&String> = matched.keys().collect();
        for (i, a) in agents.iter().enumerate() {
            for b in &agents[i + 1..] {
                let truth = matches!((truth_group.get(a.as_str()), truth_group.get(b.as_str())), (Some(x), Some(y)) if x == y);
                let found = matches!((detected_group(&matched[*a]), detected_group(&matched[*b])), (Some(x), Some(y)) if x == y);
                match (truth, found) {
                    (true, true) => tp += 1,
                    (false, true) => fp += 1,
                    (true, false) => fn_ += 1,
                    (false, false) => {}
                }
            }
        }

        let robot = log.snapshot.robot.pose.position();
        if let Some(d) = log.truth.iter().map(|a| a.pose.position().dist(robot)).min_by(f64::total_cmp) {
            m.min_distance = Some(m.min_distance.map_or(d, |x: f64| x.min(d)));
            dist_sum += d;
            dist_n += 1;
        }
        for a in &log.truth {
            let state = PersonState { pose: a.pose, velocity: a.velocity, seated: a.seated };
            m.max_person_cost = m.max_person_cost.max(person_cost(robot, &state, &social));
        }
        m.path_length += robot.dist(log.robot_after.position());

        if m.time_to_engage.is_none() && log.supervisor.phase == Phase::Engaged {
            m.time_to_engage = Some(log.time);
        }
        if !half_duplex(&log.actions) {
            m.half_duplex_violations += 1;
        }
        if let (Some(c), Some(b)) = (log.plan.cost, log.plan.braking_cost) {
            if c > b + 1e-9 {
                m.braking_violations += 1;
            }
        }
        if log.plan.stopped {
            m.stop_events += 1;
        }
    }

    m.group_f1 = if tp + fp + fn_ == 0 { 1.0 } else { 2.0 * tp as f64 / (2 * tp + fp + fn_) as f64 };
    m.mean_distance = (dist_n > 0).then(|| dist_sum / dist_n as f64);

    let mut shares = Vec::new();
    for ids in history.values() {
        let mut counts: BTreeMap<&EntityId, usize> = BTreeMap::new();
        for id in ids {
            *counts.entry(id).or_default() += 1;
        }
        let modal = counts.values().copied().max().unwrap_or(0);
        shares.push(modal as f64 / ids.len() as f64);
        m.id_switches += ids.windows(2).filter(|w| w[0] != w[1]).count() as u64;
    }
    m.association_accuracy = (!shares.is_empty()).then(|| shares.iter().sum::<f64>() / shares.len() as f64);

    m.goal_success = match script.task {
        Task::Goto { .. } => Some(logs.iter().any(|l| l.plan.goal_reached)),
        Task::Interact => Some(m.time_to_engage.is_some()),
        Task::Observe => None,
    };
    m
}

/// Agents seen at least once.
pub fn seen_agents(logs: &[TickLog]) -> BTreeSet<String> {
    logs.iter().flat_map(|l| match_agents(l).into_keys()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::engine::PlanSummary;
    use crate::geometry::Pose2;
    use crate::nav::{Control, SocialScene};
    use crate::scene::{BBox, BodyObservation, GroupRecord, PersonRecord, SceneSnapshot};
    use crate::sim::world::AgentTruth;
    use crate::supervisor::InteractionState;

    fn agent(id: &str, x: f64) -> AgentTruth {
        AgentTruth { id: id.into(), pose: Pose2::new(x, 0.0, 0.0), velocity: Default::default(), speaking: false, seated: false }
    }

    fn person(s: &mut SceneSnapshot, pid: &str, x: f64) {
        let b = EntityId::body(format!("b_{pid}"));
        s.bodies.push(BodyObservation {
            id: b.clone(),
            bbox: BBox { x: 0.0, y: 0.0, w: 10.0, h: 10.0 },
            feet_pixel: Default::default(),
            ground_pos: Some(crate::geometry::Vec2::new(x, 0.0)),
            orientation: Some(0.0),
            embedding: vec![1.0],
        });
        s.persons.push(PersonRecord { id: EntityId::person(pid), face: None, body: Some(b), voice: None, anonymous: true });
    }

    fn log(tick: u64, snapshot: SceneSnapshot, truth: Vec<AgentTruth>) -> TickLog {
        TickLog {
            tick,
            time: tick as f64 * 0.1,
            truth,
            detections: vec![],
            candidates: vec![],
            tracks: vec![],
            snapshot,
            social: SocialScene::default(),
            supervisor: InteractionState::default(),
            actions: vec![],
            plan: PlanSummary {
                goal: None,
                subgoal: None,
                route: vec![],
                control: Control::STOP,
                cost: None,
                braking_cost: None,
                predicted: vec![],
                stopped: false,
                goal_reached: false,
            },
            robot_after: Pose2::default(),
            stages: vec![],
            rng_draws: 0,
            config: None,
            script: None,
        }
    }

    fn script(groups: Vec<Vec<String>>) -> ScenarioScript {
        ScenarioScript {
            name: "t".into(),
            map: "m".into(),
            duration: 1.0,
            seed: 0,
            robot: Pose2::default(),
            task: Task::Observe,
            agents: vec![],
            sensors: Default::default(),
            groups,
        }
    }

    #[test]
    fn half_run_swap_is_one_switch() {
        let mut logs = Vec::new();
        for k in 0..10 {
            let mut s = SceneSnapshot::empty(k as f64 * 0.1);
            person(&mut s, if k < 5 { "p1" } else { "p2" }, 2.0);
            logs.push(log(k, s, vec![agent("a", 2.0)]));
        }
        let m = compute_metrics(&logs, &script(vec![]));
        assert_eq!(m.id_switches, 1);
        assert_eq!(m.association_accuracy, Some(0.5));
    }

    #[test]
    fn identical_groups_score_one() {
        let mut s = SceneSnapshot::empty(0.0);
        person(&mut s, "p1", 2.0);
        person(&mut s, "p2", 3.0);
        person(&mut s, "p3", 6.0);
        s.groups.push(GroupRecord {
            id: EntityId::group("g1"),
            members: [EntityId::person("p1"), EntityId::person("p2")].into(),
            center: crate::geometry::Vec2::new(2.5, 0.0),
        });
        let logs = vec![log(0, s, vec![agent("a", 2.0), agent("b", 3.0), agent("c", 6.0)])];
        let m = compute_metrics(&logs, &script(vec![vec!["a".into(), "b".into()]]));
        assert_eq!(m.group_f1, 1.0);
        let wrong = compute_metrics(&logs, &script(vec![vec!["a".into(), "c".into()]]));
        assert_eq!(wrong.group_f1, 0.0);
    }

    #[test]
    fn far_persons_are_not_matched() {
        let mut s = SceneSnapshot::empty(0.0);
        person(&mut s, "p1", 3.0);
        assert!(match_agents(&log(0, s, vec![agent("a", 2.0)])).is_empty());
    }
}
