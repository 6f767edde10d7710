//! Match-candidate replay files: one JSON object per line,
//! `{"a": .., "b": .., "kindA": .., "kindB": .., "likelihood": .., "t": ..}`.

use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::MatchCandidate;
use crate::scene::{EntityId, EntityKind};

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReplayRecord {
    a: String,
    b: String,
    #[serde(rename = "kindA")]
    kind_a: EntityKind,
    #[serde(rename = "kindB")]
    kind_b: EntityKind,
    likelihood: f64,
    t: f64,
}

/// Parses a replay stream into validated candidates, in file order.
/// Blank lines are skipped.
pub fn parse_replay(reader: impl BufRead) -> Result<Vec<MatchCandidate>, ReplayError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| ReplayError::Line { line: i + 1, message };
        let r: ReplayRecord = serde_json::from_str(&line).map_err(|e| err(e.to_string()))?;
        let c = MatchCandidate::new(EntityId::new(r.kind_a, r.a), EntityId::new(r.kind_b, r.b), r.likelihood, r.t);
        c.check().map_err(|e| err(e.to_string()))?;
        out.push(c);
    }
    Ok(out)
}

/// Encodes one candidate as a replay line (no trailing newline).
pub fn replay_line(c: &MatchCandidate) -> String {
    let r = ReplayRecord {
        a: c.a.token.clone(),
        b: c.b.token.clone(),
        kind_a: c.a.kind,
        kind_b: c.b.kind,
        likelihood: c.likelihood,
        t: c.time,
    };
    serde_json::to_string(&r).expect("replay record serialisation is infallible")
}
