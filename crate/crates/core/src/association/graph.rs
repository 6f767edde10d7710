use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{AssociationError, MatchCandidate};
use crate::geometry::Vec2;
use crate::scene::{EntityId, EntityKind};

/// True for the kind pairs the person manager accepts as associations.
pub fn admissible(a: EntityKind, b: EntityKind) -> bool {
    use EntityKind::*;
    matches!(
        (a, b),
        (Face, Body) | (Body, Face) | (Body, Voice) | (Voice, Body) | (Body, Group) | (Group, Body)
    ) || (a.is_feature() && b == Person)
        || (a == Person && b.is_feature())
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NodeInfo {
    /// Person synthesised by the engine rather than announced by a recogniser.
    pub anonymous: bool,
    /// o-space centre, for group nodes.
    pub center: Option<Vec2>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeData {
    pub likelihood: f64,
    pub last_updated: f64,
}

/// Unordered edge key; `a <= b` always holds.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeKey {
    pub a: EntityId,
    pub b: EntityId,
}

impl EdgeKey {
    pub fn new(x: EntityId, y: EntityId) -> Self {
        if x <= y {
            Self { a: x, b: y }
        } else {
            Self { a: y, b: x }
        }
    }

    pub fn other(&self, id: &EntityId) -> &EntityId {
        if &self.a == id {
            &self.b
        } else {
            &self.a
        }
    }

    pub fn touches(&self, id: &EntityId) -> bool {
        &self.a == id || &self.b == id
    }
}

/// Simple weighted graph of features, persons and groups.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RelationGraph {
    nodes: BTreeMap<EntityId, NodeInfo>,
    edges: BTreeMap<EdgeKey, EdgeData>,
}

impl RelationGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = (&EntityId, &NodeInfo)> {
        self.nodes.iter()
    }

    pub fn edges(&self) -> impl Iterator<Item = (&EdgeKey, &EdgeData)> {
        self.edges.iter()
    }

    pub fn contains(&self, id: &EntityId) -> bool {
        self.nodes.contains_key(id)
    }

    pub fn node(&self, id: &EntityId) -> Option<&NodeInfo> {
        self.nodes.get(id)
    }

    pub fn edge(&self, a: &EntityId, b: &EntityId) -> Option<&EdgeData> {
        self.edges.get(&EdgeKey::new(a.clone(), b.clone()))
    }

    pub fn neighbours<'a>(&'a self, id: &'a EntityId) -> impl Iterator<Item = (&'a EntityId, &'a EdgeData)> + 'a {
        self.edges.iter().filter(move |(k, _)| k.touches(id)).map(move |(k, e)| (k.other(id), e))
    }

    /// Adds a node without edges (no-op if present).
    pub fn add_node(&mut self, id: EntityId) {
        self.nodes.entry(id).or_default();
    }

    /// Registers a person the engine created itself.
    pub fn add_anonymous_person(&mut self, id: EntityId) {
        debug_assert_eq!(id.kind, EntityKind::Person);
        self.nodes.entry(id).or_default().anonymous = true;
    }

    /// Records a group node together with its o-space centre.
    pub fn upsert_group(&mut self, id: EntityId, center: Vec2) {
        debug_assert_eq!(id.kind, EntityKind::Group);
        self.nodes.entry(id).or_default().center = Some(center);
    }

    /// Inserts or overwrites the edge described by `c`.
    pub fn submit_match(&mut self, c: &MatchCandidate) -> Result<(), AssociationError> {
        c.check()?;
        self.add_node(c.a.clone());
        self.add_node(c.b.clone());
        self.edges.insert(
            EdgeKey::new(c.a.clone(), c.b.clone()),
            EdgeData { likelihood: c.likelihood, last_updated: c.time },
        );
        Ok(())
    }

    /// Drops edges older than `ttl` seconds and any non-person node left
    /// without edges. Person nodes are never removed.
    ///
    /// Panics if `ttl` is not positive.
    pub fn prune_stale(&mut self, now: f64, ttl: f64) {
        assert!(ttl > 0.0, "ttl must be positive");
        self.edges.retain(|_, e| now - e.last_updated <= ttl);
        let linked: BTreeSet<&EntityId> = self.edges.keys().flat_map(|k| [&k.a, &k.b]).collect();
        let orphans: Vec<EntityId> = self
            .nodes
            .keys()
            .filter(|id| id.kind != EntityKind::Person && !linked.contains(id))
            .cloned()
            .collect();
        for id in orphans {
            self.nodes.remove(&id);
        }
    }
}
