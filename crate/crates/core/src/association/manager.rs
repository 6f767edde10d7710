//! Stateful resolver that owns the relation graph across ticks.

use std::collections::{BTreeMap, BTreeSet};

use super::partition::{solve_partition_with, PartitionOptions, PartitionResult};
use super::{AssociationError, EdgeKey, MatchCandidate, RelationGraph};
use crate::scene::{EntityId, EntityKind};

#[derive(Clone, Debug, PartialEq)]
pub struct PersonManagerConfig {
    /// Edges not refreshed for longer than this are dropped.
    pub ttl: f64,
    /// Likelihood of the feature↔person edges written back after each
    /// resolve, which keep person ids stable over time.
    pub anchor_likelihood: f64,
    pub partition: PartitionOptions,
}

impl Default for PersonManagerConfig {
    fn default() -> Self {
        Self { ttl: 2.0, anchor_likelihood: 1.0, partition: PartitionOptions::default() }
    }
}

/// Owns the relation graph; candidates are submitted in order and
/// [`PersonManager::resolve`] runs once per tick.
#[derive(Clone, Debug)]
pub struct PersonManager {
    graph: RelationGraph,
    config: PersonManagerConfig,
    next_person: u64,
}

impl PersonManager {
    pub fn new(config: PersonManagerConfig) -> Self {
        Self { graph: RelationGraph::new(), config, next_person: 1 }
    }

    pub fn graph(&self) -> &RelationGraph {
        &self.graph
    }

    pub fn config(&self) -> &PersonManagerConfig {
        &self.config
    }

    pub fn submit(&mut self, c: &MatchCandidate) -> Result<(), AssociationError> {
        self.graph.submit_match(c)
    }

    /// Makes sure an observed feature has a node even without edges, so a
    /// lone body still yields a person.
    pub fn observe(&mut self, feature: EntityId) {
        self.graph.add_node(feature);
    }

    /// Prunes stale edges, solves the partition, gives newly synthesised
    /// persons persistent ids and anchors every person to the features in
    /// `alive` it was bound to.
    pub fn resolve(&mut self, now: f64, alive: &BTreeSet<EntityId>) -> PartitionResult {
        self.graph.prune_stale(now, self.config.ttl);
        for f in alive {
            self.graph.add_node(f.clone());
        }
        let mut options = self.config.partition.clone();
        options.pinned.extend(self.body_pins(alive));
        let mut result = solve_partition_with(&self.graph, &options);

        let mut renamed: BTreeMap<EntityId, EntityId> = BTreeMap::new();
        for p in &mut result.persons {
            if p.anonymous && !self.graph.contains(&p.id) {
                let id = EntityId::person(format!("person_{}", self.next_person));
                self.next_person += 1;
                self.graph.add_anonymous_person(id.clone());
                renamed.insert(p.id.clone(), id.clone());
                p.id = id;
            }
        }
        result.persons.sort_by(|a, b| a.id.cmp(&b.id));
        for g in &mut result.groups {
            g.members = g.members.iter().map(|m| renamed.get(m).unwrap_or(m).clone()).collect();
        }

        for p in &result.persons {
            for f in p.features().filter(|f| alive.contains(*f)) {
                debug_assert!(f.kind != EntityKind::Person);
                let anchor = MatchCandidate::new(f.clone(), p.id.clone(), self.config.anchor_likelihood, now);
                self.graph.submit_match(&anchor).expect("feature-person anchors are admissible");
            }
        }
        result
    }

    /// Live bodies stay with the person they were last anchored to: for
    /// every alive body its most recent person anchor, and for every person
    /// only its most recently anchored body.
    fn body_pins(&self, alive: &BTreeSet<EntityId>) -> BTreeSet<EdgeKey> {
        let mut by_body: BTreeMap<&EntityId, (&EdgeKey, f64)> = BTreeMap::new();
        for (k, e) in self.graph.edges() {
            let body = match (k.a.kind, k.b.kind) {
                (EntityKind::Body, EntityKind::Person) => &k.a,
                _ => continue,
            };
            if e.likelihood <= 0.0 || !alive.contains(body) {
                continue;
            }
            // Edges iterate in key order, so strict `>` keeps the smallest id on ties.
            if by_body.get(body).is_none_or(|(_, t)| e.last_updated > *t) {
                by_body.insert(body, (k, e.last_updated));
            }
        }
        let mut by_person: BTreeMap<&EntityId, (&EdgeKey, f64)> = BTreeMap::new();
        for (k, t) in by_body.into_values() {
            if by_person.get(&k.b).is_none_or(|(_, prev)| t > *prev) {
                by_person.insert(&k.b, (k, t));
            }
        }
        by_person.into_values().map(|(k, _)| k.clone()).collect()
    }
}
