//! Where to stand when joining a person or a group.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::field::CostField;
use super::NavError;
use crate::geometry::{wrap_angle, Pose2, Vec2};
use crate::scene::{EntityId, EntityKind, SceneSnapshot};

pub const CANDIDATES: usize = 72;
/// Persons are approached from within this angle of where they face.
pub const FACING_LIMIT: f64 = PI / 3.0;
const TIE: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ApproachTarget {
    Person { pose: Pose2 },
    Group { center: Vec2 },
}

impl ApproachTarget {
    pub fn from_snapshot(s: &SceneSnapshot, id: &EntityId) -> Option<Self> {
        match id.kind {
            EntityKind::Person => s.person_pose(id).map(|pose| Self::Person { pose }),
            EntityKind::Group => s.group(id).map(|g| Self::Group { center: g.center }),
            _ => None,
        }
    }

    pub fn center(&self) -> Vec2 {
        match self {
            Self::Person { pose } => pose.position(),
            Self::Group { center } => *center,
        }
    }
}

/// Candidate positions on the interaction circle in evaluation order.
pub fn approach_candidates(target: &ApproachTarget, r_int: f64) -> Vec<Vec2> {
    let step = 2.0 * PI / CANDIDATES as f64;
    let c = target.center();
    (0..CANDIDATES)
        .map(|k| {
            // 0, +1, -1, +2, -2, ... so the facing direction comes first.
            let m = k.div_ceil(2) as f64 * if k % 2 == 1 { 1.0 } else { -1.0 };
            m * step
        })
        .filter_map(|offset| match target {
            ApproachTarget::Person { pose } => {
                (offset.abs() <= FACING_LIMIT + 1e-9).then(|| c + Vec2::from_polar(r_int, wrap_angle(pose.theta + offset)))
            }
            ApproachTarget::Group { .. } => Some(c + Vec2::from_polar(r_int, offset)),
        })
        .collect()
}

/// Lowest-cost candidate on the circle, ties (within 1e-3) going to the
/// one nearest the robot. The pose faces the target.
pub fn approach_pose(target: &ApproachTarget, robot: Vec2, field: &CostField, r_int: f64) -> Result<Pose2, NavError> {
    if r_int <= 0.0 {
        return Err(NavError::InvalidParameter(format!("r_int must be positive, got {r_int}")));
    }
    let mut scored: Vec<(f64, f64, Vec2)> = approach_candidates(target, r_int)
        .into_iter()
        .map(|p| (field.sample(p), p.dist(robot), p))
        .filter(|(c, _, _)| c.is_finite())
        .collect();
    let best = scored.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return Err(NavError::Unreachable);
    }
    scored.retain(|s| s.0 <= best + TIE);
    let (_, _, p) = scored.into_iter().fold(None::<(f64, f64, Vec2)>, |b, s| match b {
        Some(b) if b.1 <= s.1 => Some(b),
        _ => Some(s),
    }).expect("at least one finite candidate");
    let facing = (target.center() - p).angle();
    Ok(Pose2::new(p.x, p.y, facing))
}
