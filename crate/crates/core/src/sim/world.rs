//! Ground-truth motion of scripted agents.

use serde::{Deserialize, Serialize};

use super::scenario::{AgentScript, OrientationPolicy};
use crate::geometry::{wrap_angle, Pose2, Vec2};

pub const STANDING_HEIGHT: f64 = 1.7;
pub const SEATED_HEIGHT: f64 = 1.25;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentTruth {
    pub id: String,
    pub pose: Pose2,
    pub velocity: Vec2,
    pub speaking: bool,
    pub seated: bool,
}

impl AgentTruth {
    pub fn height(&self) -> f64 {
        if self.seated {
            SEATED_HEIGHT
        } else {
            STANDING_HEIGHT
        }
    }
}

/// Position and velocity along the piecewise-linear waypoint path; the
/// agent waits at the first and last waypoints.
fn position_at(a: &AgentScript, t: f64) -> (Vec2, Vec2) {
    let w = &a.waypoints;
    let first = w[0];
    if t <= first.t || w.len() == 1 {
        return (Vec2::new(first.x, first.y), Vec2::ZERO);
    }
    for seg in w.windows(2) {
        let (p, q) = (seg[0], seg[1]);
        if t < q.t {
            let f = (t - p.t) / (q.t - p.t);
            let v = Vec2::new((q.x - p.x) / (q.t - p.t), (q.y - p.y) / (q.t - p.t));
            return (Vec2::new(p.x + f * (q.x - p.x), p.y + f * (q.y - p.y)), v);
        }
    }
    let last = w[w.len() - 1];
    (Vec2::new(last.x, last.y), Vec2::ZERO)
}

/// Direction of the last segment with motion that started before `t`.
fn last_heading(a: &AgentScript, t: f64) -> Option<f64> {
    a.waypoints
        .windows(2)
        .filter(|s| s[0].t < t)
        .map(|s| Vec2::new(s[1].x - s[0].x, s[1].y - s[0].y))
        .filter(|d| d.norm() > 1e-9)
        .last()
        .map(Vec2::angle)
}

pub fn agent_truth(a: &AgentScript, t: f64, robot: Vec2) -> AgentTruth {
    let (pos, velocity) = position_at(a, t);
    let theta = match a.orientation {
        OrientationPolicy::Motion { theta } => {
            if velocity.norm() > 1e-9 {
                velocity.angle()
            } else {
                last_heading(a, t).unwrap_or(theta)
            }
        }
        OrientationPolicy::Fixed { theta } => theta,
        OrientationPolicy::Robot => (robot - pos).angle(),
        OrientationPolicy::Point { x, y } => (Vec2::new(x, y) - pos).angle(),
    };
    let speaking = a.speech.iter().any(|s| t >= s[0] && t < s[1]);
    AgentTruth {
        id: a.id.clone(),
        pose: Pose2::new(pos.x, pos.y, wrap_angle(theta)),
        velocity,
        speaking,
        seated: a.seated,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::scenario::Waypoint;

    fn walker() -> AgentScript {
        AgentScript {
            id: "w".into(),
            waypoints: vec![Waypoint { t: 1.0, x: 0.0, y: 0.0 }, Waypoint { t: 3.0, x: 2.0, y: 0.0 }],
            orientation: OrientationPolicy::Motion { theta: 1.0 },
            seated: false,
            speech: vec![[2.0, 2.5]],
            appearance_seed: 1,
            voice_seed: 1,
        }
    }

    #[test]
    fn interpolates_and_waits() {
        let a = walker();
        let r = Vec2::ZERO;
        assert_eq!(agent_truth(&a, 0.0, r).pose, Pose2::new(0.0, 0.0, 1.0));
        let mid = agent_truth(&a, 2.0, r);
        assert_eq!(mid.pose.position(), Vec2::new(1.0, 0.0));
        assert_eq!(mid.velocity, Vec2::new(1.0, 0.0));
        assert!(mid.speaking);
        let end = agent_truth(&a, 5.0, r);
        assert_eq!(end.pose, Pose2::new(2.0, 0.0, 0.0));
        assert!(!end.speaking && !agent_truth(&a, 2.5, r).speaking);
    }
}
