//! Personal and group space costs.
//!
//! A person's space is an asymmetric Gaussian in their own frame: it
//! reaches further ahead than behind, stretches forward with walking
//! speed, and grows when the person is seated.

use serde::{Deserialize, Serialize};

use crate::geometry::{Pose2, Vec2};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SocialSpaceParams {
    pub sigma_front: f64,
    pub sigma_side: f64,
    pub sigma_rear: f64,
    /// Forward stretch per m/s of walking speed, seconds.
    pub velocity_gain: f64,
    pub seated_scale: f64,
    pub group_sigma: f64,
    pub peak: f64,
}

impl Default for SocialSpaceParams {
    fn default() -> Self {
        Self {
            sigma_front: 0.45,
            sigma_side: 0.45,
            sigma_rear: 0.30,
            velocity_gain: 0.8,
            seated_scale: 1.2,
            group_sigma: 0.9,
            peak: 1.0,
        }
    }
}

impl SocialSpaceParams {
    pub fn validate(&self) -> Result<(), super::NavError> {
        let positive = [
            ("sigma_front", self.sigma_front),
            ("sigma_side", self.sigma_side),
            ("sigma_rear", self.sigma_rear),
            ("group_sigma", self.group_sigma),
            ("peak", self.peak),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(super::NavError::InvalidParameter(format!("{name} must be positive")));
            }
        }
        if !(self.velocity_gain >= 0.0 && self.velocity_gain.is_finite()) {
            return Err(super::NavError::InvalidParameter("velocity_gain must be non-negative".into()));
        }
        if !(self.seated_scale >= 1.0 && self.seated_scale.is_finite()) {
            return Err(super::NavError::InvalidParameter("seated_scale must be at least 1".into()));
        }
        Ok(())
    }
}

/// What the cost model needs to know about a person.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PersonState {
    pub pose: Pose2,
    pub velocity: Vec2,
    pub seated: bool,
}

impl PersonState {
    pub fn standing(pose: Pose2) -> Self {
        Self { pose, velocity: Vec2::ZERO, seated: false }
    }
}

pub fn person_cost(point: Vec2, person: &PersonState, p: &SocialSpaceParams) -> f64 {
    let local = person.pose.to_local(point);
    let scale = if person.seated { p.seated_scale } else { 1.0 };
    let speed = person.velocity.norm();
    let sx = if local.x >= 0.0 { p.sigma_front * (1.0 + p.velocity_gain * speed) } else { p.sigma_rear } * scale;
    let sy = p.sigma_side * scale;
    p.peak * (-(local.x * local.x / (2.0 * sx * sx) + local.y * local.y / (2.0 * sy * sy))).exp()
}

/// Isotropic Gaussian filling a group's o-space.
pub fn group_cost(point: Vec2, center: Vec2, p: &SocialSpaceParams) -> f64 {
    p.peak * (-point.dist(center).powi(2) / (2.0 * p.group_sigma * p.group_sigma)).exp()
}
