//! Multi-person Kalman tracker on the ground plane.
//!
//! Detections are projected feet points with an appearance embedding. Each
//! tick the tracker predicts, matches detections to tracks with an optimal
//! assignment over a mixed position/appearance cost, updates, folds in
//! voice bearings as bearing-only measurements, and runs the track
//! lifecycle. Audio never creates a track.

use nalgebra::{Matrix2, Matrix4, RowVector4, Vector2, Vector4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::association::{hungarian_assign, MatchCandidate};
use crate::geometry::{wrap_angle, Pose2, Vec2};
use crate::scene::EntityId;

/// 99% quantile of the chi-square distribution with two degrees of freedom.
pub const CHI2_2_99: f64 = 9.210_340_371_976_184;

#[derive(Debug, Error, PartialEq)]
pub enum TrackerError {
    #[error("pixel ray does not reach the floor in front of the camera")]
    HorizonViolation,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    /// Optical centre height above the floor, metres.
    pub height: f64,
    /// Rotation about the camera's lateral axis; negative looks down.
    pub pitch: f64,
    pub focal: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Default for Camera {
    fn default() -> Self {
        Self { height: 1.2, pitch: -0.3, focal: 400.0, cx: 640.0, cy: 360.0 }
    }
}

impl Camera {
    /// Floor point (robot frame: x forward, y left) seen at pixel `(u, v)`.
    pub fn project_to_ground(&self, u: f64, v: f64) -> Result<Vec2, TrackerError> {
        let (s, c) = self.pitch.sin_cos();
        let a = (u - self.cx) / self.focal;
        let b = (v - self.cy) / self.focal;
        // Downward component of the ray through the pixel.
        let down = b * c - s;
        if down <= 1e-12 {
            return Err(TrackerError::HorizonViolation);
        }
        let t = self.height / down;
        Ok(Vec2::new(t * (b * s + c), -t * a))
    }

    /// Pixel at which a floor point in the robot frame appears, if it is in
    /// front of the camera.
    pub fn project_to_image(&self, p: Vec2) -> Option<(f64, f64)> {
        self.project_point(p.x, p.y, 0.0)
    }

    /// Pixel of a 3D point (robot frame, z up).
    pub fn project_point(&self, x: f64, y: f64, z: f64) -> Option<(f64, f64)> {
        let (s, c) = self.pitch.sin_cos();
        let dz = z - self.height;
        // Camera axes: forward (c, 0, s), right (0, -1, 0), down (s, 0, -c).
        let depth = x * c + dz * s;
        if depth <= 1e-9 {
            return None;
        }
        let right = -y;
        let down = x * s - dz * c;
        Some((self.cx + self.focal * right / depth, self.cy + self.focal * down / depth))
    }
}

/// Free-function form of [`Camera::project_to_ground`].
pub fn project_to_ground(feet: Vec2, camera: &Camera) -> Result<Vec2, TrackerError> {
    camera.project_to_ground(feet.x, feet.y)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    /// Map-frame ground position.
    pub ground_pos: Vec2,
    pub embedding: Vec<f64>,
    pub confidence: f64,
    /// Id of the body observation the detection came from.
    pub source: EntityId,
}

/// A voice bearing handed to the tracker.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoaMeasurement {
    pub voice: EntityId,
    /// Bearing relative to the robot heading.
    pub doa: f64,
    pub reliable: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackStatus {
    Tentative,
    Confirmed,
    Dead,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Track {
    pub id: EntityId,
    /// `(x, y, vx, vy)`.
    pub state: Vector4<f64>,
    pub covariance: Matrix4<f64>,
    pub embedding: Vec<f64>,
    /// Consecutive ticks with a detection or bearing update.
    pub hits: u32,
    /// Consecutive ticks without either.
    pub misses: u32,
    pub status: TrackStatus,
    /// Body observation matched this tick, if any.
    pub last_source: Option<EntityId>,
    /// Set once the velocity has been seeded from two detections.
    pub velocity_seeded: bool,
}

impl Track {
    pub fn position(&self) -> Vec2 {
        Vec2::new(self.state[0], self.state[1])
    }

    pub fn velocity(&self) -> Vec2 {
        Vec2::new(self.state[2], self.state[3])
    }

    pub fn summary(&self) -> TrackSummary {
        TrackSummary {
            id: self.id.clone(),
            x: self.state[0],
            y: self.state[1],
            vx: self.state[2],
            vy: self.state[3],
            status: self.status,
        }
    }
}

/// Compact per-tick dump of a track.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackSummary {
    pub id: EntityId,
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub status: TrackStatus,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackerConfig {
    /// White-noise acceleration spectral density, m²/s³.
    pub accel_noise: f64,
    /// Position measurement standard deviation, metres.
    pub meas_sigma: f64,
    pub init_pos_sigma: f64,
    pub init_vel_sigma: f64,
    /// Weight of the position term in the association cost.
    pub lambda: f64,
    pub gate: f64,
    pub confirm_hits: u32,
    pub kill_misses: u32,
    /// Weight kept by the old embedding in the running average.
    pub embedding_alpha: f64,
    pub doa_gate: f64,
    pub doa_sigma: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            accel_noise: 0.5,
            meas_sigma: 0.1,
            init_pos_sigma: 0.3,
            init_vel_sigma: 1.0,
            lambda: 0.3,
            gate: CHI2_2_99,
            confirm_hits: 3,
            kill_misses: 5,
            embedding_alpha: 0.9,
            doa_gate: 15f64.to_radians(),
            doa_sigma: 10f64.to_radians(),
        }
    }
}

fn transition(dt: f64) -> Matrix4<f64> {
    let mut f = Matrix4::identity();
    f[(0, 2)] = dt;
    f[(1, 3)] = dt;
    f
}

/// Discretised white-noise acceleration; composes exactly, so two half
/// steps equal one full step.
fn process_noise(q: f64, dt: f64) -> Matrix4<f64> {
    let (a, b, c) = (dt.powi(3) / 3.0, dt.powi(2) / 2.0, dt);
    let mut m = Matrix4::zeros();
    for i in 0..2 {
        m[(i, i)] = q * a;
        m[(i, i + 2)] = q * b;
        m[(i + 2, i)] = q * b;
        m[(i + 2, i + 2)] = q * c;
    }
    m
}

fn symmetrise(m: &mut Matrix4<f64>) {
    *m = (*m + m.transpose()) * 0.5;
}

/// Constant-velocity prediction of every live track.
pub fn predict(tracks: &mut [Track], dt: f64, cfg: &TrackerConfig) {
    assert!(dt > 0.0, "dt must be positive");
    let f = transition(dt);
    let q = process_noise(cfg.accel_noise, dt);
    for t in tracks.iter_mut().filter(|t| t.status != TrackStatus::Dead) {
        t.state = f * t.state;
        t.covariance = f * t.covariance * f.transpose() + q;
        symmetrise(&mut t.covariance);
    }
}

fn position_innovation_cov(t: &Track, cfg: &TrackerConfig) -> Matrix2<f64> {
    t.covariance.fixed_view::<2, 2>(0, 0).into_owned() + Matrix2::identity() * cfg.meas_sigma.powi(2)
}

/// Squared Mahalanobis distance of a ground point from a track's predicted
/// position.
pub fn mahalanobis_sq(t: &Track, p: Vec2, cfg: &TrackerConfig) -> f64 {
    let s = position_innovation_cov(t, cfg);
    let r = Vector2::new(p.x - t.state[0], p.y - t.state[1]);
    match s.try_inverse() {
        Some(inv) => (r.transpose() * inv * r)[0],
        None => f64::INFINITY,
    }
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Association cost matrix; gated pairs are infinite.
pub fn association_costs(tracks: &[&Track], detections: &[Detection], cfg: &TrackerConfig) -> Vec<Vec<f64>> {
    tracks
        .iter()
        .map(|t| {
            detections
                .iter()
                .map(|d| {
                    let m2 = mahalanobis_sq(t, d.ground_pos, cfg);
                    if m2 > cfg.gate {
                        f64::INFINITY
                    } else {
                        cfg.lambda * m2.sqrt() + (1.0 - cfg.lambda) * (1.0 - cosine(&t.embedding, &d.embedding))
                    }
                })
                .collect()
        })
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Association {
    /// (track index, detection index) pairs.
    pub matches: Vec<(usize, usize)>,
    pub unmatched_tracks: Vec<usize>,
    pub unmatched_detections: Vec<usize>,
}

/// Optimal one-to-one matching of live tracks to detections.
pub fn associate(tracks: &[Track], detections: &[Detection], cfg: &TrackerConfig) -> Association {
    let live: Vec<usize> = (0..tracks.len()).filter(|&i| tracks[i].status != TrackStatus::Dead).collect();
    let refs: Vec<&Track> = live.iter().map(|&i| &tracks[i]).collect();
    let cost = association_costs(&refs, detections, cfg);
    let assignment = hungarian_assign(&cost, false).expect("cost matrix is well formed");
    let mut out = Association::default();
    let mut used = vec![false; detections.len()];
    for (r, c) in assignment.row_to_col.iter().enumerate() {
        match c {
            Some(d) => {
                out.matches.push((live[r], *d));
                used[*d] = true;
            }
            None => out.unmatched_tracks.push(live[r]),
        }
    }
    out.unmatched_detections = (0..detections.len()).filter(|&d| !used[d]).collect();
    out
}

/// Joseph-form update; keeps the covariance symmetric positive definite.
fn kalman_update<const M: usize>(
    t: &mut Track,
    h: &nalgebra::SMatrix<f64, M, 4>,
    innovation: &nalgebra::SVector<f64, M>,
    r: &nalgebra::SMatrix<f64, M, M>,
) {
    let p = t.covariance;
    let s = h * p * h.transpose() + r;
    let Some(s_inv) = s.try_inverse() else { return };
    let k = p * h.transpose() * s_inv;
    t.state += k * innovation;
    let i_kh = Matrix4::identity() - k * h;
    t.covariance = i_kh * p * i_kh.transpose() + k * r * k.transpose();
    symmetrise(&mut t.covariance);
}

fn update_position(t: &mut Track, d: &Detection, cfg: &TrackerConfig) {
    let mut h = nalgebra::SMatrix::<f64, 2, 4>::zeros();
    h[(0, 0)] = 1.0;
    h[(1, 1)] = 1.0;
    let z = Vector2::new(d.ground_pos.x - t.state[0], d.ground_pos.y - t.state[1]);
    kalman_update(t, &h, &z, &(Matrix2::identity() * cfg.meas_sigma.powi(2)));

    blend_embedding(t, &d.embedding, cfg.embedding_alpha);
}

/// Two-point start: the second detection fixes the velocity by
/// differencing against the (unmoved) first one.
fn seed_velocity(t: &mut Track, d: &Detection, dt: f64, cfg: &TrackerConfig) {
    let p = d.ground_pos;
    let v = (p - t.position()) * (1.0 / dt);
    t.state = Vector4::new(p.x, p.y, v.x, v.y);
    let r = cfg.meas_sigma.powi(2);
    let mut cov = Matrix4::zeros();
    for i in 0..2 {
        cov[(i, i)] = r;
        cov[(i, i + 2)] = r / dt;
        cov[(i + 2, i)] = r / dt;
        cov[(i + 2, i + 2)] = 2.0 * r / (dt * dt);
    }
    t.covariance = cov;
    t.velocity_seeded = true;
    blend_embedding(t, &d.embedding, cfg.embedding_alpha);
}

fn blend_embedding(t: &mut Track, e: &[f64], a: f64) {
    let mut m: Vec<f64> = t.embedding.iter().zip(e).map(|(x, y)| a * x + (1.0 - a) * y).collect();
    let n = m.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n > 1e-12 {
        m.iter_mut().for_each(|v| *v /= n);
        t.embedding = m;
    }
}

/// Bearing of a track from the robot, relative to its heading.
pub fn predicted_bearing(t: &Track, robot: &Pose2) -> f64 {
    robot.bearing_to(t.position())
}

/// Outcome of folding one voice bearing into the tracks.
#[derive(Clone, Debug, PartialEq)]
pub struct DoaFusion {
    /// Index of the updated track, if one fell inside the gate.
    pub track: Option<usize>,
    pub residual: f64,
    pub candidate: Option<MatchCandidate>,
}

/// Bearing-only update of the live track nearest in angle to `doa`, if it
/// lies within the angular gate.
pub fn fuse_doa(tracks: &mut [Track], doa: &DoaMeasurement, robot: &Pose2, time: f64, cfg: &TrackerConfig) -> DoaFusion {
    let none = DoaFusion { track: None, residual: f64::NAN, candidate: None };
    if !doa.reliable {
        return none;
    }
    let nearest = tracks
        .iter()
        .enumerate()
        .filter(|(_, t)| t.status != TrackStatus::Dead)
        .map(|(i, t)| (i, wrap_angle(doa.doa - predicted_bearing(t, robot))))
        .filter(|(_, r)| r.abs() <= cfg.doa_gate)
        .fold(None::<(usize, f64)>, |best, cur| match best {
            Some(b) if b.1.abs() <= cur.1.abs() => Some(b),
            _ => Some(cur),
        });
    let Some((i, residual)) = nearest else { return none };

    let t = &mut tracks[i];
    let (dx, dy) = (t.state[0] - robot.x, t.state[1] - robot.y);
    let r2 = dx * dx + dy * dy;
    if r2 > 1e-9 {
        let h = RowVector4::new(-dy / r2, dx / r2, 0.0, 0.0);
        let z = nalgebra::SVector::<f64, 1>::new(residual);
        let r = nalgebra::SMatrix::<f64, 1, 1>::new(cfg.doa_sigma.powi(2));
        kalman_update(t, &h, &z, &r);
    }
    t.hits += 1;
    t.misses = 0;
    let likelihood = (-residual * residual / (2.0 * cfg.doa_sigma.powi(2))).exp();
    DoaFusion {
        track: Some(i),
        residual,
        candidate: Some(MatchCandidate::new(t.id.clone(), doa.voice.clone(), likelihood, time)),
    }
}

/// Owns the tracks and hands out track ids.
#[derive(Clone, Debug)]
pub struct Tracker {
    pub config: TrackerConfig,
    tracks: Vec<Track>,
    next_id: u64,
}

/// What one tracker step produced.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepOutput {
    /// Body↔voice candidates from bearing fusion.
    pub candidates: Vec<MatchCandidate>,
    /// Position innovation of each matched track, metres.
    pub innovations: Vec<(EntityId, f64)>,
}

impl Tracker {
    pub fn new(config: TrackerConfig) -> Self {
        Self { config, tracks: Vec::new(), next_id: 1 }
    }

    /// Live tracks, in creation order.
    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn track(&self, id: &EntityId) -> Option<&Track> {
        self.tracks.iter().find(|t| &t.id == id)
    }

    fn spawn(&mut self, d: &Detection) {
        let c = &self.config;
        let mut cov = Matrix4::zeros();
        cov[(0, 0)] = c.init_pos_sigma.powi(2);
        cov[(1, 1)] = c.init_pos_sigma.powi(2);
        cov[(2, 2)] = c.init_vel_sigma.powi(2);
        cov[(3, 3)] = c.init_vel_sigma.powi(2);
        self.tracks.push(Track {
            id: EntityId::body(format!("body_{}", self.next_id)),
            state: Vector4::new(d.ground_pos.x, d.ground_pos.y, 0.0, 0.0),
            covariance: cov,
            embedding: d.embedding.clone(),
            hits: 1,
            misses: 0,
            status: TrackStatus::Tentative,
            last_source: Some(d.source.clone()),
            velocity_seeded: false,
        });
        self.next_id += 1;
    }

    /// predict → associate → update → bearing fusion → lifecycle.
    /// Tracks that die this tick are removed after the step.
    pub fn step(
        &mut self,
        detections: &[Detection],
        doas: &[DoaMeasurement],
        robot: &Pose2,
        time: f64,
        dt: f64,
    ) -> StepOutput {
        let cfg = self.config;
        predict(&mut self.tracks, dt, &cfg);
        let assoc = associate(&self.tracks, detections, &cfg);
        let mut out = StepOutput::default();
        let mut hit = vec![false; self.tracks.len()];
        for t in &mut self.tracks {
            t.last_source = None;
        }
        for &(ti, di) in &assoc.matches {
            let t = &mut self.tracks[ti];
            let before = t.position();
            if t.velocity_seeded {
                update_position(t, &detections[di], &cfg);
            } else {
                seed_velocity(t, &detections[di], dt, &cfg);
            }
            out.innovations.push((t.id.clone(), before.dist(detections[di].ground_pos)));
            t.last_source = Some(detections[di].source.clone());
            t.hits += 1;
            t.misses = 0;
            hit[ti] = true;
        }
        for doa in doas {
            let fused = fuse_doa(&mut self.tracks, doa, robot, time, &cfg);
            if let Some(i) = fused.track {
                hit[i] = true;
            }
            out.candidates.extend(fused.candidate);
        }
        for (i, t) in self.tracks.iter_mut().enumerate() {
            if !hit[i] {
                t.misses += 1;
                t.hits = 0;
            }
            if t.misses >= cfg.kill_misses {
                t.status = TrackStatus::Dead;
            } else if t.status == TrackStatus::Tentative && t.hits >= cfg.confirm_hits {
                t.status = TrackStatus::Confirmed;
            }
        }
        self.tracks.retain(|t| t.status != TrackStatus::Dead);
        for &di in &assoc.unmatched_detections {
            self.spawn(&detections[di]);
        }
        out
    }
}
