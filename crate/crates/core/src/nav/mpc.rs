//! Receding-horizon controller for a differential-drive base.
//!
//! Deterministic shooting: a fixed lattice of control sequences is rolled
//! out through the unicycle model, the cheapest is kept and then refined by
//! coordinate descent on each step's `(v, ω)`. Only the first control is
//! meant to be executed before replanning.

use serde::{Deserialize, Serialize};

use super::field::CostField;
use super::NavError;
use crate::geometry::{wrap_angle, Pose2, Vec2};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Control {
    pub v: f64,
    pub omega: f64,
}

impl Control {
    pub const STOP: Control = Control { v: 0.0, omega: 0.0 };

    pub fn new(v: f64, omega: f64) -> Self {
        Self { v, omega }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlSequence {
    pub controls: Vec<Control>,
    pub dt: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub dt: f64,
    pub steps: usize,
    pub v_min: f64,
    pub v_max: f64,
    pub omega_max: f64,
    pub w_goal: f64,
    pub w_social: f64,
    pub w_control: f64,
    pub w_terminal: f64,
    pub refine_passes: usize,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            dt: 0.1,
            steps: 20,
            v_min: -0.2,
            v_max: 0.6,
            omega_max: 1.0,
            w_goal: 1.0,
            w_social: 5.0,
            w_control: 0.1,
            w_terminal: 10.0,
            refine_passes: 3,
        }
    }
}

impl PlannerConfig {
    pub fn within_bounds(&self, u: Control) -> bool {
        u.v >= self.v_min - 1e-12 && u.v <= self.v_max + 1e-12 && u.omega.abs() <= self.omega_max + 1e-12
    }

    pub fn validate(&self) -> Result<(), NavError> {
        let bad = |m: &str| Err(NavError::InvalidParameter(m.into()));
        if !(self.dt > 0.0 && self.dt.is_finite()) || self.steps == 0 {
            return bad("planner needs dt > 0 and at least one step");
        }
        if !(self.v_min <= 0.0 && self.v_max >= 0.0 && self.omega_max >= 0.0) {
            return bad("velocity bounds must contain zero");
        }
        if ![self.w_goal, self.w_social, self.w_control, self.w_terminal].iter().all(|w| *w >= 0.0 && w.is_finite()) {
            return bad("weights must be non-negative");
        }
        Ok(())
    }

    fn clamp(&self, u: Control) -> Control {
        Control::new(u.v.clamp(self.v_min, self.v_max), u.omega.clamp(-self.omega_max, self.omega_max))
    }
}

/// Exact unicycle step: straight below |ω| < 1e-6, otherwise an arc of
/// radius v/ω.
pub fn forward_model(s: Pose2, u: Control, dt: f64) -> Pose2 {
    if u.omega.abs() < 1e-6 {
        return Pose2::new(s.x + u.v * dt * s.theta.cos(), s.y + u.v * dt * s.theta.sin(), s.theta);
    }
    let r = u.v / u.omega;
    let th = s.theta + u.omega * dt;
    Pose2::new(s.x + r * (th.sin() - s.theta.sin()), s.y - r * (th.cos() - s.theta.cos()), wrap_angle(th))
}

pub fn trajectory(start: Pose2, controls: &[Control], dt: f64) -> Vec<Pose2> {
    let mut out = Vec::with_capacity(controls.len());
    let mut s = start;
    for &u in controls {
        s = forward_model(s, u, dt);
        out.push(s);
    }
    out
}

/// Summed goal, field and effort costs along the rollout plus a terminal
/// goal term; infinite once any visited position is blocked.
pub fn rollout_cost(start: Pose2, controls: &[Control], field: &CostField, goal: Vec2, cfg: &PlannerConfig) -> f64 {
    let mut s = start;
    let mut j = 0.0;
    for &u in controls {
        s = forward_model(s, u, cfg.dt);
        let c = field.sample(s.position());
        if !c.is_finite() {
            return f64::INFINITY;
        }
        j += cfg.w_goal * s.position().dist(goal).powi(2) + cfg.w_social * c + cfg.w_control * (u.v * u.v + u.omega * u.omega);
    }
    j + cfg.w_terminal * s.position().dist(goal).powi(2)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanOutput {
    pub sequence: ControlSequence,
    pub cost: f64,
    /// Cost of stopping in place, for the dominance check.
    pub braking_cost: f64,
    /// Poses predicted for the returned sequence.
    pub predicted: Vec<Pose2>,
}

impl PlanOutput {
    pub fn first(&self) -> Control {
        self.sequence.controls.first().copied().unwrap_or(Control::STOP)
    }
}

const LATTICE_V: [f64; 5] = [-0.2, 0.0, 0.2, 0.4, 0.6];
const LATTICE_OMEGA: [f64; 7] = [-1.0, -0.5, -0.25, 0.0, 0.25, 0.5, 1.0];

/// The fixed candidate set: braking first, then constant primitives,
/// turn-then-straight primitives, and the previous plan shifted by a step.
pub fn lattice(cfg: &PlannerConfig, previous: Option<&[Control]>) -> Vec<Vec<Control>> {
    let t = cfg.steps;
    let mut out = vec![vec![Control::STOP; t]];
    for &v in &LATTICE_V {
        for &w in &LATTICE_OMEGA {
            out.push(vec![cfg.clamp(Control::new(v, w)); t]);
        }
    }
    for &w in &[-1.0, -0.5, 0.5, 1.0] {
        for &v in &[0.0, 0.2] {
            for k in (2..t).step_by(2) {
                let mut seq = vec![cfg.clamp(Control::new(v, w)); k];
                seq.resize(t, cfg.clamp(Control::new(cfg.v_max, 0.0)));
                out.push(seq);
            }
        }
    }
    if let Some(prev) = previous.filter(|p| !p.is_empty()) {
        let mut seq: Vec<Control> = prev.iter().skip(1).map(|&u| cfg.clamp(u)).collect();
        let last = *seq.last().unwrap_or(&Control::STOP);
        seq.resize(t, last);
        out.push(seq);
    }
    out
}

pub fn plan(
    start: Pose2,
    goal: Vec2,
    field: &CostField,
    cfg: &PlannerConfig,
    previous: Option<&[Control]>,
) -> Result<PlanOutput, NavError> {
    cfg.validate()?;
    let cost = |seq: &[Control]| rollout_cost(start, seq, field, goal, cfg);
    let candidates = lattice(cfg, previous);
    let braking_cost = cost(&candidates[0]);
    let mut best: Option<(f64, Vec<Control>)> = None;
    for seq in candidates {
        let c = cost(&seq);
        if c.is_finite() && best.as_ref().is_none_or(|b| c < b.0) {
            best = Some((c, seq));
        }
    }
    let (mut best_cost, mut seq) = best.ok_or(NavError::NoFeasiblePlan)?;

    let (mut dv, mut dw) = (0.1, 0.25);
    for _ in 0..cfg.refine_passes {
        for t in 0..seq.len() {
            for delta in [Control::new(dv, 0.0), Control::new(-dv, 0.0), Control::new(0.0, dw), Control::new(0.0, -dw)] {
                let orig = seq[t];
                let tried = cfg.clamp(Control::new(orig.v + delta.v, orig.omega + delta.omega));
                if tried == orig {
                    continue;
                }
                seq[t] = tried;
                let c = cost(&seq);
                if c < best_cost {
                    best_cost = c;
                } else {
                    seq[t] = orig;
                }
            }
        }
        dv *= 0.5;
        dw *= 0.5;
    }
    assert!(seq.iter().all(|&u| cfg.within_bounds(u)), "planner produced out-of-bounds control");
    let predicted = trajectory(start, &seq, cfg.dt);
    Ok(PlanOutput { sequence: ControlSequence { controls: seq, dt: cfg.dt }, cost: best_cost, braking_cost, predicted })
}
