//! Most-probable person/feature partition of a [`RelationGraph`].
//!
//! A partition is described by the set of kept edges. Every connected
//! cluster of kept edges may hold at most one face, one body, one voice and
//! one person. Among conflict-free partitions the solver maximises the
//! affinity (sum of kept likelihoods), then keeps as few edges as possible,
//! then prefers the lexicographically smallest kept-edge list.
//!
//! Each connected component is solved independently: a Hungarian-based
//! construction provides the first incumbent and a branch-and-bound search
//! over keep/drop decisions (heaviest edges first) proves or improves it.
//! Group edges are resolved afterwards: each body joins at most one group,
//! the one it is most strongly linked to.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::diagnostics::connected_components;
use super::graph::{EdgeKey, RelationGraph};
use super::hungarian::hungarian_assign;
use crate::geometry::Vec2;
use crate::scene::{EntityId, EntityKind, GroupRecord, PersonRecord};

const EPS: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedEdge {
    pub a: EntityId,
    pub b: EntityId,
    pub likelihood: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PartitionResult {
    pub persons: Vec<PersonRecord>,
    pub groups: Vec<GroupRecord>,
    pub affinity: f64,
    pub kept_edges: Vec<WeightedEdge>,
    pub discarded_edges: Vec<WeightedEdge>,
    /// False when a component exhausted the search budget; the answer is
    /// then the best partition found, not a proven optimum.
    pub exhaustive: bool,
}

impl PartitionResult {
    /// The person a feature was bound to.
    pub fn owner_of(&self, feature: &EntityId) -> Option<&PersonRecord> {
        self.persons.iter().find(|p| p.features().any(|f| f == feature))
    }

    pub fn person(&self, id: &EntityId) -> Option<&PersonRecord> {
        self.persons.iter().find(|p| &p.id == id)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PartitionOptions {
    /// Search-tree nodes explored per connected component before the
    /// solver settles for its incumbent.
    pub node_budget: usize,
    /// Edges that must be kept. A component whose pins cannot all be
    /// honoured together is solved without them.
    pub pinned: BTreeSet<EdgeKey>,
}

impl Default for PartitionOptions {
    fn default() -> Self {
        Self { node_budget: 2_000_000, pinned: BTreeSet::new() }
    }
}

pub fn solve_partition(g: &RelationGraph) -> PartitionResult {
    solve_partition_with(g, &PartitionOptions::default())
}

fn kind_bit(kind: EntityKind) -> u8 {
    match kind {
        EntityKind::Face => 1,
        EntityKind::Body => 2,
        EntityKind::Voice => 4,
        EntityKind::Person => 8,
        EntityKind::Group => 0,
    }
}

pub fn solve_partition_with(g: &RelationGraph, opts: &PartitionOptions) -> PartitionResult {
    let identity_nodes: Vec<EntityId> =
        g.nodes().map(|(id, _)| id).filter(|id| id.kind != EntityKind::Group).cloned().collect();
    let identity_edges: Vec<(EdgeKey, f64)> = g
        .edges()
        .filter(|(k, e)| k.a.kind != EntityKind::Group && k.b.kind != EntityKind::Group && e.likelihood > 0.0)
        .map(|(k, e)| (k.clone(), e.likelihood))
        .collect();

    let mut kept: BTreeSet<EdgeKey> = BTreeSet::new();
    let mut exhaustive = true;
    let links: Vec<(&EntityId, &EntityId)> = identity_edges.iter().map(|(k, _)| (&k.a, &k.b)).collect();
    for component in connected_components(identity_nodes.iter(), links.iter().copied()) {
        if component.len() < 2 {
            continue;
        }
        let members: BTreeSet<&EntityId> = component.iter().collect();
        let edges: Vec<(EdgeKey, f64)> =
            identity_edges.iter().filter(|(k, _)| members.contains(&k.a)).cloned().collect();
        let (chosen, complete) = solve_component(&component, &edges, &opts.pinned, opts.node_budget);
        exhaustive &= complete;
        kept.extend(chosen);
    }

    // Clusters of kept identity edges.
    let kept_links: Vec<(&EntityId, &EntityId)> = kept.iter().map(|k| (&k.a, &k.b)).collect();
    let clusters = connected_components(identity_nodes.iter(), kept_links.iter().copied());

    let mut persons = Vec::new();
    let mut taken: BTreeSet<EntityId> = g.nodes().map(|(id, _)| id.clone()).collect();
    for c in &clusters {
        let pick = |kind: EntityKind| c.iter().find(|id| id.kind == kind).cloned();
        let (face, body, voice) = (pick(EntityKind::Face), pick(EntityKind::Body), pick(EntityKind::Voice));
        let record = match pick(EntityKind::Person) {
            Some(pid) => {
                let anonymous = g.node(&pid).map(|n| n.anonymous).unwrap_or(false);
                PersonRecord { id: pid, face, body, voice, anonymous }
            }
            // Bodies anchor physical presence; lone faces or voices do not.
            None => match &body {
                Some(b) => {
                    let id = fresh_person_id(&format!("anon_{}", b.token), &mut taken);
                    PersonRecord { id, face, body, voice, anonymous: true }
                }
                None => continue,
            },
        };
        if record.features().next().is_some() {
            persons.push(record);
        }
    }
    persons.sort_by(|a, b| a.id.cmp(&b.id));

    // Groups: each body keeps its strongest group edge.
    let mut best_group: BTreeMap<&EntityId, (&EdgeKey, f64)> = BTreeMap::new();
    for (k, e) in g.edges() {
        let (body, group) = match (k.a.kind, k.b.kind) {
            (EntityKind::Body, EntityKind::Group) => (&k.a, &k.b),
            (EntityKind::Group, EntityKind::Body) => (&k.b, &k.a),
            _ => continue,
        };
        if e.likelihood <= 0.0 {
            continue;
        }
        let better = match best_group.get(body) {
            None => true,
            Some((cur, l)) => {
                e.likelihood > *l + EPS || ((e.likelihood - *l).abs() <= EPS && group < cur.other(body))
            }
        };
        if better {
            best_group.insert(body, (k, e.likelihood));
        }
    }
    let mut members: BTreeMap<EntityId, BTreeSet<EntityId>> = BTreeMap::new();
    for (body, (k, _)) in &best_group {
        kept.insert((*k).clone());
        if let Some(p) = persons.iter().find(|p| p.body.as_ref() == Some(*body)) {
            members.entry(k.other(body).clone()).or_default().insert(p.id.clone());
        }
    }
    let groups = members
        .into_iter()
        .map(|(id, members)| {
            let center = g.node(&id).and_then(|n| n.center).unwrap_or(Vec2::ZERO);
            GroupRecord { id, members, center }
        })
        .collect();

    let mut kept_edges = Vec::new();
    let mut discarded_edges = Vec::new();
    let mut affinity = 0.0;
    for (k, e) in g.edges() {
        let w = WeightedEdge { a: k.a.clone(), b: k.b.clone(), likelihood: e.likelihood };
        if kept.contains(k) {
            affinity += e.likelihood;
            kept_edges.push(w);
        } else {
            discarded_edges.push(w);
        }
    }

    PartitionResult { persons, groups, affinity, kept_edges, discarded_edges, exhaustive }
}

fn fresh_person_id(base: &str, taken: &mut BTreeSet<EntityId>) -> EntityId {
    let mut id = EntityId::person(base);
    let mut n = 1;
    while taken.contains(&id) {
        id = EntityId::person(format!("{base}_{n}"));
        n += 1;
    }
    taken.insert(id.clone());
    id
}

/// Solves one connected component. Returns the kept edges and whether the
/// search completed within budget.
fn solve_component(
    nodes: &[EntityId],
    edges: &[(EdgeKey, f64)],
    pinned: &BTreeSet<EdgeKey>,
    budget: usize,
) -> (Vec<EdgeKey>, bool) {
    let index: BTreeMap<&EntityId, usize> = nodes.iter().enumerate().map(|(i, id)| (id, i)).collect();

    // Heaviest first; key order breaks ties so the search is canonical.
    let mut order: Vec<usize> = (0..edges.len()).collect();
    order.sort_by(|&x, &y| {
        edges[y].1.partial_cmp(&edges[x].1).unwrap_or(Ordering::Equal).then_with(|| edges[x].0.cmp(&edges[y].0))
    });
    // Rank of each searched edge in key order, for the lexicographic tie-break.
    let mut by_key: Vec<usize> = (0..order.len()).collect();
    by_key.sort_by(|&x, &y| edges[order[x]].0.cmp(&edges[order[y]].0));
    let mut key_rank = vec![0usize; order.len()];
    for (rank, &pos) in by_key.iter().enumerate() {
        key_rank[pos] = rank;
    }

    let search_edges: Vec<SearchEdge> = order
        .iter()
        .enumerate()
        .map(|(pos, &i)| SearchEdge {
            u: index[&edges[i].0.a],
            v: index[&edges[i].0.b],
            w: edges[i].1,
            rank: key_rank[pos],
            pinned: pinned.contains(&edges[i].0),
        })
        .collect();
    let masks: Vec<u8> = nodes.iter().map(|id| kind_bit(id.kind)).collect();

    let seed = hungarian_seed(nodes, edges);
    let mut search = Search::new(&search_edges, &masks, budget);
    search.offer_clusters(&seed);
    search.run();
    if search.best.affinity == f64::NEG_INFINITY {
        let free: Vec<SearchEdge> = search_edges.iter().map(|e| SearchEdge { pinned: false, ..*e }).collect();
        let mut retry = Search::new(&free, &masks, budget);
        retry.offer_clusters(&seed);
        retry.run();
        let kept = retry.best.kept.iter().map(|&pos| edges[order[pos]].0.clone()).collect();
        return (kept, !retry.exhausted_budget);
    }

    let kept = search.best.kept.iter().map(|&pos| edges[order[pos]].0.clone()).collect();
    (kept, !search.exhausted_budget)
}

/// Greedy construction: persons are paired with bodies, then faces and
/// voices are assigned to the resulting clusters, each step an optimal
/// assignment on cost `1 - likelihood`. Returns a cluster label per node.
fn hungarian_seed(nodes: &[EntityId], edges: &[(EdgeKey, f64)]) -> Vec<usize> {
    let weight: BTreeMap<(&EntityId, &EntityId), f64> =
        edges.iter().flat_map(|(k, w)| [((&k.a, &k.b), *w), ((&k.b, &k.a), *w)]).collect();
    let w = |a: &EntityId, b: &EntityId| weight.get(&(a, b)).copied();
    let of_kind = |kind| nodes.iter().enumerate().filter(move |(_, id)| id.kind == kind).map(|(i, _)| i);

    let persons: Vec<usize> = of_kind(EntityKind::Person).collect();
    let bodies: Vec<usize> = of_kind(EntityKind::Body).collect();
    let mut clusters: Vec<Vec<usize>> = Vec::new();

    let cost: Vec<Vec<f64>> = persons
        .iter()
        .map(|&p| bodies.iter().map(|&b| w(&nodes[p], &nodes[b]).map_or(f64::INFINITY, |l| 1.0 - l)).collect())
        .collect();
    let pb = hungarian_assign(&cost, false).expect("finite cost matrix");
    let mut body_used = vec![false; bodies.len()];
    for (pi, &p) in persons.iter().enumerate() {
        match pb.row_to_col[pi] {
            Some(bi) => {
                body_used[bi] = true;
                clusters.push(vec![p, bodies[bi]]);
            }
            None => clusters.push(vec![p]),
        }
    }
    for (bi, &b) in bodies.iter().enumerate() {
        if !body_used[bi] {
            clusters.push(vec![b]);
        }
    }

    for kind in [EntityKind::Face, EntityKind::Voice] {
        let features: Vec<usize> = of_kind(kind).collect();
        let cost: Vec<Vec<f64>> = features
            .iter()
            .map(|&f| {
                clusters
                    .iter()
                    .map(|c| {
                        let score: f64 = c.iter().filter_map(|&m| w(&nodes[f], &nodes[m])).sum();
                        if score > 0.0 {
                            1.0 - score
                        } else {
                            f64::INFINITY
                        }
                    })
                    .collect()
            })
            .collect();
        let assignment = hungarian_assign(&cost, false).expect("finite cost matrix");
        let mut lone = Vec::new();
        for (fi, &f) in features.iter().enumerate() {
            match assignment.row_to_col.get(fi).copied().flatten() {
                Some(ci) => clusters[ci].push(f),
                None => lone.push(vec![f]),
            }
        }
        clusters.extend(lone);
    }

    let mut label = vec![0; nodes.len()];
    for (ci, c) in clusters.iter().enumerate() {
        for &m in c {
            label[m] = ci;
        }
    }
    label
}

#[derive(Clone, Copy)]
struct SearchEdge {
    u: usize,
    v: usize,
    w: f64,
    /// Position in key order.
    rank: usize,
    pinned: bool,
}

#[derive(Clone)]
struct Best {
    affinity: f64,
    /// Positions (in search order) of kept edges.
    kept: Vec<usize>,
    /// Key ranks of kept edges, ascending.
    ranks: Vec<usize>,
}

impl Best {
    fn beats(&self, other: &Best) -> bool {
        if self.affinity > other.affinity + EPS {
            return true;
        }
        if self.affinity < other.affinity - EPS {
            return false;
        }
        match self.kept.len().cmp(&other.kept.len()) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => self.ranks < other.ranks,
        }
    }
}

/// Keep/drop branch and bound with an undoable union–find.
struct Search<'a> {
    edges: &'a [SearchEdge],
    parent: Vec<usize>,
    rank: Vec<u32>,
    mask: Vec<u8>,
    undo: Vec<Option<(usize, usize, u8, bool)>>,
    cannot: Vec<(usize, usize)>,
    kept: Vec<usize>,
    affinity: f64,
    best: Best,
    budget: usize,
    visited: usize,
    exhausted_budget: bool,
}

impl<'a> Search<'a> {
    fn new(edges: &'a [SearchEdge], masks: &[u8], budget: usize) -> Self {
        let n = masks.len();
        Self {
            edges,
            parent: (0..n).collect(),
            rank: vec![0; n],
            mask: masks.to_vec(),
            undo: Vec::new(),
            cannot: Vec::new(),
            kept: Vec::new(),
            affinity: 0.0,
            best: Best { affinity: f64::NEG_INFINITY, kept: Vec::new(), ranks: Vec::new() },
            budget,
            visited: 0,
            exhausted_budget: false,
        }
    }

    fn find(&self, mut x: usize) -> usize {
        while self.parent[x] != x {
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if self.rank[ra] < self.rank[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        let bumped = self.rank[ra] == self.rank[rb];
        self.undo.push(Some((rb, ra, self.mask[ra], bumped)));
        self.parent[rb] = ra;
        self.mask[ra] |= self.mask[rb];
        if bumped {
            self.rank[ra] += 1;
        }
    }

    fn rollback(&mut self) {
        if let Some(Some((child, root, mask, bumped))) = self.undo.pop() {
            self.parent[child] = child;
            self.mask[root] = mask;
            if bumped {
                self.rank[root] -= 1;
            }
        }
    }

    fn separated(&self, ru: usize, rv: usize) -> bool {
        self.cannot.iter().any(|&(x, y)| {
            let (rx, ry) = (self.find(x), self.find(y));
            (rx == ru && ry == rv) || (rx == rv && ry == ru)
        })
    }

    /// Upper bound on what the remaining edges can still add.
    fn optimistic(&self, from: usize) -> f64 {
        self.edges[from..]
            .iter()
            .filter(|e| {
                let (ru, rv) = (self.find(e.u), self.find(e.v));
                ru == rv || self.mask[ru] & self.mask[rv] == 0
            })
            .map(|e| e.w)
            .sum()
    }

    fn current(&self) -> Best {
        let mut ranks: Vec<usize> = self.kept.iter().map(|&p| self.edges[p].rank).collect();
        ranks.sort_unstable();
        Best { affinity: self.affinity, kept: self.kept.clone(), ranks }
    }

    /// Evaluates an externally constructed clustering as an incumbent.
    fn offer_clusters(&mut self, label: &[usize]) {
        if self.edges.iter().any(|e| e.pinned && label[e.u] != label[e.v]) {
            return;
        }
        let kept: Vec<usize> =
            (0..self.edges.len()).filter(|&p| label[self.edges[p].u] == label[self.edges[p].v]).collect();
        let affinity = kept.iter().map(|&p| self.edges[p].w).sum();
        let mut ranks: Vec<usize> = kept.iter().map(|&p| self.edges[p].rank).collect();
        ranks.sort_unstable();
        let candidate = Best { affinity, kept, ranks };
        if candidate.beats(&self.best) {
            self.best = candidate;
        }
    }

    fn run(&mut self) {
        self.descend(0);
    }

    fn descend(&mut self, i: usize) {
        if self.visited >= self.budget {
            self.exhausted_budget = true;
            return;
        }
        self.visited += 1;
        if i == self.edges.len() {
            let cur = self.current();
            if cur.beats(&self.best) {
                self.best = cur;
            }
            return;
        }
        let bound = self.affinity + self.optimistic(i);
        if bound < self.best.affinity - EPS {
            return;
        }
        if bound <= self.best.affinity + EPS && self.kept.len() > self.best.kept.len() {
            return;
        }

        let (u, v, w) = (self.edges[i].u, self.edges[i].v, self.edges[i].w);
        let (ru, rv) = (self.find(u), self.find(v));
        if ru == rv {
            self.keep(i, w, None);
        } else if self.mask[ru] & self.mask[rv] != 0 || self.separated(ru, rv) {
            if !self.edges[i].pinned {
                self.descend(i + 1);
            }
        } else if self.edges[i].pinned {
            self.keep(i, w, Some((u, v)));
        } else {
            self.keep(i, w, Some((u, v)));
            self.cannot.push((u, v));
            self.descend(i + 1);
            self.cannot.pop();
        }
    }

    fn keep(&mut self, i: usize, w: f64, merge: Option<(usize, usize)>) {
        if let Some((u, v)) = merge {
            self.union(u, v);
        }
        let saved = self.affinity;
        self.affinity += w;
        self.kept.push(i);
        self.descend(i + 1);
        self.kept.pop();
        self.affinity = saved;
        if merge.is_some() {
            self.rollback();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::MatchCandidate;
    use super::*;

    fn graph(edges: &[(EntityId, EntityId, f64)]) -> RelationGraph {
        let mut g = RelationGraph::new();
        for (a, b, l) in edges {
            g.submit_match(&MatchCandidate::new(a.clone(), b.clone(), *l, 0.0)).unwrap();
        }
        g
    }

    #[test]
    fn empty_graph() {
        let r = solve_partition(&RelationGraph::new());
        assert!(r.persons.is_empty());
        assert_eq!(r.affinity, 0.0);
        assert!(r.exhaustive);
    }

    #[test]
    fn face_goes_to_the_likelier_person() {
        let face = EntityId::face("face_432");
        let g = graph(&[
            (EntityId::person("john"), face.clone(), 0.8),
            (EntityId::person("jane"), face.clone(), 0.2),
        ]);
        let r = solve_partition(&g);
        assert_eq!(r.owner_of(&face).unwrap().id, EntityId::person("john"));
        assert_eq!(r.discarded_edges.len(), 1);
        assert_eq!(r.discarded_edges[0].b, EntityId::person("jane"));
        assert!((r.affinity - 0.8).abs() < 1e-12);
        // jane has no features left, so she is not reported.
        assert!(r.person(&EntityId::person("jane")).is_none());
    }

    #[test]
    fn body_and_voice_without_person_spawn_one() {
        let (b1, v2) = (EntityId::body("body_1"), EntityId::voice("voice_2"));
        let g = graph(&[(b1.clone(), v2.clone(), 0.7)]);
        let r = solve_partition(&g);
        assert_eq!(r.persons.len(), 1);
        let p = &r.persons[0];
        assert!(p.anonymous);
        assert_eq!(p.body.as_ref(), Some(&b1));
        assert_eq!(p.voice.as_ref(), Some(&v2));
    }

    #[test]
    fn lone_face_does_not_spawn_a_person() {
        let mut g = RelationGraph::new();
        g.add_node(EntityId::face("f1"));
        g.add_node(EntityId::body("b1"));
        let r = solve_partition(&g);
        assert_eq!(r.persons.len(), 1);
        assert_eq!(r.persons[0].body, Some(EntityId::body("b1")));
    }

    #[test]
    fn modality_conflict_keeps_heavier_side() {
        // Two faces compete for one body.
        let b = EntityId::body("b");
        let g = graph(&[
            (EntityId::face("f1"), b.clone(), 0.6),
            (EntityId::face("f2"), b.clone(), 0.9),
        ]);
        let r = solve_partition(&g);
        assert_eq!(r.owner_of(&b).unwrap().face, Some(EntityId::face("f2")));
        assert!(r.owner_of(&EntityId::face("f1")).is_none());
    }

    #[test]
    fn chain_through_body_is_transitive() {
        let g = graph(&[
            (EntityId::face("f"), EntityId::body("b"), 0.9),
            (EntityId::body("b"), EntityId::person("p"), 0.8),
            (EntityId::body("b"), EntityId::voice("v"), 0.7),
        ]);
        let r = solve_partition(&g);
        assert_eq!(r.persons.len(), 1);
        let p = &r.persons[0];
        assert_eq!(p.id, EntityId::person("p"));
        assert!(!p.anonymous);
        assert_eq!((p.face.is_some(), p.body.is_some(), p.voice.is_some()), (true, true, true));
        assert!((r.affinity - 2.4).abs() < 1e-12);
    }

    #[test]
    fn groups_attach_after_persons() {
        let mut g = graph(&[
            (EntityId::body("b1"), EntityId::group("g1"), 0.9),
            (EntityId::body("b1"), EntityId::group("g2"), 0.4),
            (EntityId::body("b2"), EntityId::group("g1"), 0.8),
        ]);
        g.upsert_group(EntityId::group("g1"), Vec2::new(1.0, 2.0));
        let r = solve_partition(&g);
        assert_eq!(r.groups.len(), 1);
        assert_eq!(r.groups[0].members.len(), 2);
        assert_eq!(r.groups[0].center, Vec2::new(1.0, 2.0));
        assert!((r.affinity - 1.7).abs() < 1e-12);
    }

    #[test]
    fn result_is_deterministic() {
        let g = graph(&[
            (EntityId::face("f"), EntityId::body("b1"), 0.5),
            (EntityId::face("f"), EntityId::body("b2"), 0.5),
            (EntityId::person("p"), EntityId::body("b1"), 0.5),
            (EntityId::person("p"), EntityId::body("b2"), 0.5),
        ]);
        let a = serde_json::to_string(&solve_partition(&g)).unwrap();
        let b = serde_json::to_string(&solve_partition(&g)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let mut edges = Vec::new();
        for f in 0..4 {
            for b in 0..4 {
                edges.push((EntityId::face(format!("f{f}")), EntityId::body(format!("b{b}")), 0.5));
            }
        }
        let g = graph(&edges);
        let r = solve_partition_with(&g, &PartitionOptions { node_budget: 3, ..Default::default() });
        assert!(!r.exhaustive);
        // The Hungarian seed still yields a full matching.
        assert!((r.affinity - 2.0).abs() < 1e-12);
    }

    #[test]
    fn pinned_edge_is_kept_over_a_heavier_rival() {
        let (b, p, q) = (EntityId::body("b"), EntityId::person("p"), EntityId::person("q"));
        let g = graph(&[(b.clone(), p.clone(), 0.3), (b.clone(), q.clone(), 0.9)]);
        let opts = PartitionOptions { pinned: [EdgeKey::new(b.clone(), p.clone())].into(), ..Default::default() };
        let r = solve_partition_with(&g, &opts);
        assert_eq!(r.owner_of(&b).unwrap().id, p);
        assert!(r.exhaustive);
    }

    #[test]
    fn contradictory_pins_fall_back_to_the_free_optimum() {
        let (b, p, q) = (EntityId::body("b"), EntityId::person("p"), EntityId::person("q"));
        let g = graph(&[(b.clone(), p.clone(), 0.3), (b.clone(), q.clone(), 0.9)]);
        let opts = PartitionOptions {
            pinned: [EdgeKey::new(b.clone(), p.clone()), EdgeKey::new(b.clone(), q.clone())].into(),
            ..Default::default()
        };
        assert_eq!(solve_partition_with(&g, &opts).owner_of(&b).unwrap().id, q);
    }
}
