//! Conversational group (F-formation) detection.
//!
//! Every person votes for an o-space centre a fixed stride in front of
//! them. A grouping is scored by how tightly each group's votes cluster
//! around their mean, plus a fixed price per group:
//!
//! ```text
//! E(g) = Σᵢ ‖cᵢ − μ_g(i)‖² / σ² + mdl · |groups|
//! ```
//!
//! The minimum is found by steepest-descent local search over move, merge
//! and swap steps, restarted from a few fixed initial groupings.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::geometry::{Pose2, Vec2};
use crate::scene::{EntityId, GroupRecord};

const IMPROVEMENT: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GcffParams {
    /// Distance from a person to the o-space centre they vote for, metres.
    pub stride: f64,
    /// Price of opening a group, in units of σ².
    pub mdl: f64,
    /// Position noise σ, metres.
    pub sigma: f64,
}

impl Default for GcffParams {
    fn default() -> Self {
        Self { stride: 0.7, mdl: 35.0, sigma: 0.1 }
    }
}

/// The point a person at `pose` proposes as o-space centre.
pub fn o_space_candidate(pose: &Pose2, stride: f64) -> Vec2 {
    pose.position() + Vec2::from_polar(stride, pose.theta)
}

#[derive(Clone, Copy, Debug, Default)]
struct Moments {
    n: usize,
    sum: Vec2,
    sum_sq: f64,
}

impl Moments {
    fn add(mut self, c: Vec2) -> Self {
        self.n += 1;
        self.sum = self.sum + c;
        self.sum_sq += c.norm_sq();
        self
    }

    fn remove(mut self, c: Vec2) -> Self {
        self.n -= 1;
        self.sum = self.sum - c;
        self.sum_sq -= c.norm_sq();
        self
    }

    fn merge(self, o: Moments) -> Self {
        Moments { n: self.n + o.n, sum: self.sum + o.sum, sum_sq: self.sum_sq + o.sum_sq }
    }

    /// Contribution of one group to the objective; empty groups cost nothing.
    fn cost(&self, p: &GcffParams) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let scatter = (self.sum_sq - self.sum.norm_sq() / self.n as f64).max(0.0);
        scatter / (p.sigma * p.sigma) + p.mdl
    }
}

/// Objective of a labelling over o-space candidates.
pub fn objective(candidates: &[Vec2], labels: &[usize], params: &GcffParams) -> f64 {
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut groups = vec![Moments::default(); k];
    for (c, &l) in candidates.iter().zip(labels) {
        groups[l] = groups[l].add(*c);
    }
    groups.iter().map(|g| g.cost(params)).sum()
}

/// Renumbers labels in order of first appearance.
fn canonical(labels: &[usize]) -> Vec<usize> {
    let mut map = Vec::<(usize, usize)>::new();
    labels
        .iter()
        .map(|&l| match map.iter().find(|(from, _)| *from == l) {
            Some(&(_, to)) => to,
            None => {
                let to = map.len();
                map.push((l, to));
                to
            }
        })
        .collect()
}

enum Move {
    Relocate { i: usize, to: usize },
    Merge { a: usize, b: usize },
    Swap { i: usize, j: usize },
}

fn local_search(cands: &[Vec2], start: Vec<usize>, p: &GcffParams) -> Vec<usize> {
    let n = cands.len();
    let mut labels = canonical(&start);
    loop {
        // One spare slot so a person can open a new group.
        let k = labels.iter().max().map_or(0, |m| m + 1) + 1;
        let mut g = vec![Moments::default(); k];
        for i in 0..n {
            g[labels[i]] = g[labels[i]].add(cands[i]);
        }
        let cost: Vec<f64> = g.iter().map(|m| m.cost(p)).collect();

        let mut best: Option<(f64, Move)> = None;
        let mut offer = |delta: f64, mv: Move| {
            if delta < -IMPROVEMENT && best.as_ref().is_none_or(|(d, _)| delta < *d - IMPROVEMENT) {
                best = Some((delta, mv));
            }
        };
        for i in 0..n {
            let from = labels[i];
            let left = g[from].remove(cands[i]);
            for to in 0..k {
                if to == from || (g[to].n == 0 && left.n == 0) {
                    continue;
                }
                let joined = g[to].add(cands[i]);
                offer(left.cost(p) + joined.cost(p) - cost[from] - cost[to], Move::Relocate { i, to });
            }
        }
        for a in 0..k {
            for b in a + 1..k {
                if g[a].n > 0 && g[b].n > 0 {
                    offer(g[a].merge(g[b]).cost(p) - cost[a] - cost[b], Move::Merge { a, b });
                }
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (labels[i], labels[j]);
                if a == b {
                    continue;
                }
                let ga = g[a].remove(cands[i]).add(cands[j]);
                let gb = g[b].remove(cands[j]).add(cands[i]);
                offer(ga.cost(p) + gb.cost(p) - cost[a] - cost[b], Move::Swap { i, j });
            }
        }

        match best {
            None => return labels,
            Some((_, Move::Relocate { i, to })) => labels[i] = to,
            Some((_, Move::Merge { a, b })) => labels.iter_mut().filter(|l| **l == b).for_each(|l| *l = a),
            Some((_, Move::Swap { i, j })) => labels.swap(i, j),
        }
        labels = canonical(&labels);
    }
}

/// Single-linkage clusters of candidates closer than the distance at which
/// merging two singletons stops paying off.
fn threshold_start(cands: &[Vec2], p: &GcffParams) -> Vec<usize> {
    let reach = p.sigma * (2.0 * p.mdl).sqrt();
    let n = cands.len();
    let mut labels: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in i + 1..n {
            if cands[i].dist(cands[j]) < reach && labels[i] != labels[j] {
                let (keep, drop) = (labels[i].min(labels[j]), labels[i].max(labels[j]));
                labels.iter_mut().filter(|l| **l == drop).for_each(|l| *l = keep);
            }
        }
    }
    labels
}

/// Group labels (contiguous, in order of first appearance) minimising the
/// objective for people at `poses`.
pub fn group_labels(poses: &[Pose2], params: &GcffParams) -> Vec<usize> {
    let cands: Vec<Vec2> = poses.iter().map(|q| o_space_candidate(q, params.stride)).collect();
    if cands.is_empty() {
        return Vec::new();
    }
    let starts = [(0..cands.len()).collect(), vec![0; cands.len()], threshold_start(&cands, params)];
    let mut best: Option<(f64, Vec<usize>)> = None;
    for s in starts {
        let labels = local_search(&cands, s, params);
        let e = objective(&cands, &labels, params);
        if best.as_ref().is_none_or(|(b, _)| e < *b - IMPROVEMENT) {
            best = Some((e, labels));
        }
    }
    best.map(|(_, l)| l).unwrap_or_default()
}

/// Partitions people into conversational groups. Everyone ends up in
/// exactly one group; lone people form singleton groups. Groups are named
/// after their smallest member and listed in id order.
pub fn detect_groups(persons: &[(EntityId, Pose2)], params: &GcffParams) -> Vec<GroupRecord> {
    let poses: Vec<Pose2> = persons.iter().map(|(_, p)| *p).collect();
    let labels = group_labels(&poses, params);
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut out: Vec<GroupRecord> = (0..k)
        .map(|g| {
            let idx: Vec<usize> = (0..persons.len()).filter(|&i| labels[i] == g).collect();
            let members: BTreeSet<EntityId> = idx.iter().map(|&i| persons[i].0.clone()).collect();
            let center = idx.iter().fold(Vec2::ZERO, |s, &i| s + o_space_candidate(&poses[i], params.stride))
                * (1.0 / idx.len() as f64);
            let first = members.iter().next().expect("groups are non-empty");
            GroupRecord { id: EntityId::group(format!("grp_{}", first.token)), members, center }
        })
        .collect();
    out.sort_by(|a, b| a.id.cmp(&b.id));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn people(poses: &[Pose2]) -> Vec<(EntityId, Pose2)> {
        poses.iter().enumerate().map(|(i, p)| (EntityId::person(format!("p{i}")), *p)).collect()
    }

    #[test]
    fn candidate_closed_forms() {
        let a = o_space_candidate(&Pose2::new(0.0, 0.0, 0.0), 0.7);
        assert!((a.x - 0.7).abs() < 1e-12 && a.y.abs() < 1e-12);
        let b = o_space_candidate(&Pose2::new(1.0, 1.0, FRAC_PI_2), 0.7);
        assert!((b.x - 1.0).abs() < 1e-12 && (b.y - 1.7).abs() < 1e-12);
    }

    #[test]
    fn lone_person_is_a_singleton_group() {
        let g = detect_groups(&people(&[Pose2::new(2.0, 1.0, PI)]), &GcffParams::default());
        assert_eq!(g.len(), 1);
        assert!((g[0].center.x - 1.3).abs() < 1e-12 && (g[0].center.y - 1.0).abs() < 1e-12);
    }

    #[test]
    fn vis_a_vis_pair_shares_a_centre() {
        let g = detect_groups(&people(&[Pose2::new(0.0, 0.0, 0.0), Pose2::new(1.4, 0.0, PI)]), &GcffParams::default());
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].members.len(), 2);
        assert_eq!(g[0].id, EntityId::group("grp_p0"));
        assert!((g[0].center.x - 0.7).abs() < 1e-12 && g[0].center.y.abs() < 1e-12);
    }

    #[test]
    fn back_to_back_pair_splits() {
        let g = detect_groups(&people(&[Pose2::new(0.0, 0.0, PI), Pose2::new(0.2, 0.0, 0.0)]), &GcffParams::default());
        assert_eq!(g.len(), 2);
    }

    #[test]
    fn empty_input() {
        assert!(detect_groups(&[], &GcffParams::default()).is_empty());
    }
}
