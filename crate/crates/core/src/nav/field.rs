//! Navigation cost field over the occupancy grid.

use serde::{Deserialize, Serialize};

use super::grid::{distance_transform, OccupancyGrid};
use super::social::{group_cost, person_cost, PersonState, SocialSpaceParams};
use super::NavError;
use crate::geometry::Vec2;
use crate::scene::SceneSnapshot;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    pub social: SocialSpaceParams,
    /// Cost on occupied cells.
    pub obstacle_peak: f64,
    /// Exponential decay of the obstacle term, per metre.
    pub obstacle_decay: f64,
    /// Beyond this distance from an obstacle the obstacle term is zero.
    pub inflation_radius: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        Self { social: SocialSpaceParams::default(), obstacle_peak: 10.0, obstacle_decay: 5.0, inflation_radius: 0.5 }
    }
}

impl CostParams {
    pub fn validate(&self) -> Result<(), NavError> {
        self.social.validate()?;
        let finite = [self.obstacle_peak, self.obstacle_decay, self.inflation_radius].iter().all(|v| v.is_finite() && *v >= 0.0);
        if !finite || self.obstacle_peak <= 0.0 {
            return Err(NavError::InvalidParameter("obstacle terms must be non-negative with a positive peak".into()));
        }
        Ok(())
    }
}

/// People and group centres the field is built from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SocialScene {
    pub persons: Vec<PersonState>,
    pub groups: Vec<Vec2>,
}

impl SocialScene {
    /// Persons placed at their body's ground position and orientation,
    /// standing still; groups with at least two members.
    pub fn from_snapshot(s: &SceneSnapshot) -> Self {
        let persons = s.persons.iter().filter_map(|p| s.person_pose(&p.id)).map(PersonState::standing).collect();
        let groups = s.groups.iter().filter(|g| g.members.len() >= 2).map(|g| g.center).collect();
        Self { persons, groups }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldLayer {
    Obstacle,
    /// Persons and groups together.
    Social,
    /// The group part of the social layer alone.
    Group,
    Total,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostField {
    pub grid: OccupancyGrid,
    pub obstacle: Vec<f64>,
    pub social: Vec<f64>,
    pub group: Vec<f64>,
    pub total: Vec<f64>,
}

pub fn build_cost_field(scene: &SocialScene, grid: &OccupancyGrid, params: &CostParams) -> CostField {
    let dist = distance_transform(grid);
    let n = grid.cells.len();
    let (mut obstacle, mut social, mut group) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for r in 0..grid.height {
        for c in 0..grid.width {
            let i = grid.index(c, r);
            let d = dist[i];
            if d <= params.inflation_radius {
                obstacle[i] = params.obstacle_peak * (-params.obstacle_decay * d).exp();
            }
            let p = grid.cell_center(c, r);
            let g: f64 = scene.groups.iter().map(|&g| group_cost(p, g, &params.social)).sum();
            group[i] = g;
            social[i] = g + scene.persons.iter().map(|s| person_cost(p, s, &params.social)).sum::<f64>();
        }
    }
    let total = obstacle.iter().zip(&social).map(|(a, b)| a + b).collect();
    CostField { grid: grid.clone(), obstacle, social, group, total }
}

impl CostField {
    pub fn layer(&self, layer: FieldLayer) -> &[f64] {
        match layer {
            FieldLayer::Obstacle => &self.obstacle,
            FieldLayer::Social => &self.social,
            FieldLayer::Group => &self.group,
            FieldLayer::Total => &self.total,
        }
    }

    /// Bilinear interpolation of the total cost between cell centres.
    /// Infinite off the map and inside occupied cells.
    pub fn sample(&self, p: Vec2) -> f64 {
        self.sample_layer(FieldLayer::Total, p)
    }

    pub fn sample_layer(&self, layer: FieldLayer, p: Vec2) -> f64 {
        let g = &self.grid;
        if g.blocked(p) {
            return f64::INFINITY;
        }
        let values = self.layer(layer);
        let fx = ((p.x - g.origin.x) / g.resolution - 0.5).clamp(0.0, (g.width - 1) as f64);
        let fy = ((p.y - g.origin.y) / g.resolution - 0.5).clamp(0.0, (g.height - 1) as f64);
        let (c0, r0) = (fx.floor() as usize, fy.floor() as usize);
        let (c1, r1) = ((c0 + 1).min(g.width - 1), (r0 + 1).min(g.height - 1));
        let (tx, ty) = (fx - c0 as f64, fy - r0 as f64);
        let v = |c, r| values[g.index(c, r)];
        let bottom = v(c0, r0) * (1.0 - tx) + v(c1, r0) * tx;
        let top = v(c0, r1) * (1.0 - tx) + v(c1, r1) * tx;
        bottom * (1.0 - ty) + top * ty
    }

    /// Value of the cell containing `p`, if on the map.
    pub fn cell_value(&self, layer: FieldLayer, p: Vec2) -> Option<f64> {
        self.grid.cell_of(p).map(|(c, r)| self.layer(layer)[self.grid.index(c, r)])
    }
}
