//! Social navigation: cost fields around people, approach poses and the
//! model-predictive controller that drives the base.

mod approach;
mod field;
mod grid;
mod mpc;
mod route;
mod social;

use thiserror::Error;

pub use approach::{approach_candidates, approach_pose, ApproachTarget, CANDIDATES, FACING_LIMIT};
pub use field::{build_cost_field, CostField, CostParams, FieldLayer, SocialScene};
pub use grid::{distance_transform, MapError, OccupancyGrid};
pub use mpc::{
    forward_model, lattice, plan, rollout_cost, trajectory, Control, ControlSequence, PlanOutput, PlannerConfig,
};
pub use route::{plan_route, route_length, subgoal, RouteConfig};
pub use social::{group_cost, person_cost, PersonState, SocialSpaceParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NavError {
    #[error("no approach candidate is free")]
    Unreachable,
    #[error("every candidate control sequence hits an obstacle")]
    NoFeasiblePlan,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
