//! The person manager: a probabilistic relation graph between transient
//! features (faces, bodies, voices), persistent persons and groups, and the
//! machinery that turns it into the most likely set of persons.

mod diagnostics;
mod graph;
mod hungarian;
mod manager;
mod partition;
mod replay;
mod voice;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use diagnostics::{
    connected_components, graph_diagnostics, shortest_path, spanning_forest, GraphDiagnostics, PathResult,
    SpanningForest,
};
pub use graph::{admissible, EdgeData, EdgeKey, NodeInfo, RelationGraph};
pub use hungarian::{hungarian_assign, Assignment};
pub use manager::{PersonManager, PersonManagerConfig};
pub use partition::{solve_partition, solve_partition_with, PartitionOptions, PartitionResult, WeightedEdge};
pub use replay::{parse_replay, replay_line, ReplayError};
pub use voice::{voice_match, VoiceDatabase, VoiceMatch};

use crate::scene::{EntityId, EntityKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssociationError {
    #[error("inadmissible association between a {a} and a {b}")]
    InadmissiblePair { a: EntityKind, b: EntityKind },
    #[error("entity {0} cannot be associated with itself")]
    SelfLoop(String),
    #[error("likelihood {0} is outside [0, 1]")]
    LikelihoodOutOfRange(f64),
    #[error("timestamp {0} is not finite")]
    NonFiniteTime(f64),
    #[error("row {0} has no admissible column")]
    AllForbiddenRow(usize),
    #[error("cost matrix is ragged or contains NaN / -inf")]
    InvalidCostMatrix,
}

/// A broadcast association hypothesis, e.g. `{john, face_432, 0.8}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchCandidate {
    pub a: EntityId,
    pub b: EntityId,
    pub likelihood: f64,
    pub time: f64,
}

impl MatchCandidate {
    pub fn new(a: EntityId, b: EntityId, likelihood: f64, time: f64) -> Self {
        Self { a, b, likelihood, time }
    }

    pub fn check(&self) -> Result<(), AssociationError> {
        if self.a == self.b {
            return Err(AssociationError::SelfLoop(self.a.token.clone()));
        }
        if !admissible(self.a.kind, self.b.kind) {
            return Err(AssociationError::InadmissiblePair { a: self.a.kind, b: self.b.kind });
        }
        if !(0.0..=1.0).contains(&self.likelihood) {
            return Err(AssociationError::LikelihoodOutOfRange(self.likelihood));
        }
        if !self.time.is_finite() {
            return Err(AssociationError::NonFiniteTime(self.time));
        }
        Ok(())
    }
}
