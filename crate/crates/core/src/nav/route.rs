//! Global route over the cost field.
//!
//! The receding-horizon controller only sees two seconds ahead, so a far
//! goal pulls it straight through anything with finite cost. A cheapest
//! path over the whole field gives it a nearby subgoal instead, which
//! already bends around people and groups.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::field::CostField;
use crate::geometry::Vec2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RouteConfig {
    /// Extra cost per metre per unit of field cost.
    pub cost_weight: f64,
    /// How far along the route the subgoal is placed, metres.
    pub lookahead: f64,
}

impl Default for RouteConfig {
    fn default() -> Self {
        Self { cost_weight: 3.0, lookahead: 1.2 }
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Key(f64, usize);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Key {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&o.0).then(self.1.cmp(&o.1))
    }
}

/// Cheapest 8-connected cell path from `start` to `goal`, as cell centres
/// with the exact endpoints at both ends. Stepping into a cell costs its
/// length times `1 + cost_weight · cost`. The start cell may be blocked;
/// no other visited cell may. `None` if the goal is off the map, blocked
/// or cut off.
pub fn plan_route(field: &CostField, start: Vec2, goal: Vec2, cfg: &RouteConfig) -> Option<Vec<Vec2>> {
    let g = &field.grid;
    let (sc, sr) = g.cell_of(start)?;
    let (gc, gr) = g.cell_of(goal)?;
    let target = g.index(gc, gr);
    if !field.total[target].is_finite() || g.cells[target] {
        return None;
    }
    let n = g.cells.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    let source = g.index(sc, sr);
    dist[source] = 0.0;
    let mut heap = BinaryHeap::from([Reverse(Key(0.0, source))]);
    const STEPS: [(i64, i64); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];
    while let Some(Reverse(Key(d, i))) = heap.pop() {
        if i == target {
            break;
        }
        if d > dist[i] {
            continue;
        }
        let (c, r) = ((i % g.width) as i64, (i / g.width) as i64);
        for (dc, dr) in STEPS {
            let (nc, nr) = (c + dc, r + dr);
            if nc < 0 || nr < 0 || nc >= g.width as i64 || nr >= g.height as i64 {
                continue;
            }
            let j = g.index(nc as usize, nr as usize);
            if g.cells[j] {
                continue;
            }
            let len = if dc != 0 && dr != 0 { std::f64::consts::SQRT_2 } else { 1.0 } * g.resolution;
            let nd = d + len * (1.0 + cfg.cost_weight * field.total[j]);
            if nd < dist[j] {
                dist[j] = nd;
                prev[j] = i;
                heap.push(Reverse(Key(nd, j)));
            }
        }
    }
    if !dist[target].is_finite() {
        return None;
    }
    let mut cells = vec![target];
    while *cells.last().unwrap() != source {
        cells.push(prev[*cells.last().unwrap()]);
    }
    cells.reverse();
    let mut path: Vec<Vec2> = cells.iter().map(|&i| g.cell_center(i % g.width, i / g.width)).collect();
    path[0] = start;
    *path.last_mut().unwrap() = goal;
    Some(path)
}

/// The point `lookahead` metres along `route`, or its end.
pub fn subgoal(route: &[Vec2], lookahead: f64) -> Option<Vec2> {
    let mut left = lookahead;
    for w in route.windows(2) {
        let step = w[0].dist(w[1]);
        if step >= left && step > 0.0 {
            return Some(w[0] + (w[1] - w[0]) * (left / step));
        }
        left -= step;
    }
    route.last().copied()
}

pub fn route_length(route: &[Vec2]) -> f64 {
    route.windows(2).map(|w| w[0].dist(w[1])).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nav::{build_cost_field, CostParams, OccupancyGrid, PersonState, SocialScene};
    use crate::geometry::Pose2;

    fn room() -> OccupancyGrid {
        OccupancyGrid::empty(60, 40, 0.1, Vec2::new(-1.0, -2.0))
    }

    #[test]
    fn empty_room_route_is_straight() {
        let f = build_cost_field(&SocialScene::default(), &room(), &CostParams::default());
        let r = plan_route(&f, Vec2::ZERO, Vec2::new(3.0, 0.0), &RouteConfig::default()).unwrap();
        assert!(r.iter().all(|p| p.y.abs() < 0.051));
        assert!((route_length(&r) - 3.0).abs() < 0.1);
        let s = subgoal(&r, 1.2).unwrap();
        assert!((s.x - 1.2).abs() < 0.06, "{s:?}");
    }

    #[test]
    fn route_goes_around_a_person() {
        let scene = SocialScene { persons: vec![PersonState::standing(Pose2::new(1.5, 0.0, 0.0))], groups: vec![] };
        let f = build_cost_field(&scene, &room(), &CostParams::default());
        let r = plan_route(&f, Vec2::ZERO, Vec2::new(3.0, 0.0), &RouteConfig::default()).unwrap();
        let closest = r.iter().map(|p| p.dist(Vec2::new(1.5, 0.0))).fold(f64::INFINITY, f64::min);
        assert!(closest > 0.45, "{closest}");
    }

    #[test]
    fn walled_off_goal_has_no_route() {
        let mut g = room();
        for r in 0..g.height {
            g.set(30, r, true);
        }
        let f = build_cost_field(&SocialScene::default(), &g, &CostParams::default());
        assert!(plan_route(&f, Vec2::ZERO, Vec2::new(3.0, 0.0), &RouteConfig::default()).is_none());
        assert_eq!(subgoal(&[], 1.0), None);
    }
}
