//! Sensor emulation: what the camera and microphones would report about
//! the ground truth, with configurable noise and dropout.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::scenario::{AgentScript, SensorConfig};
use super::world::AgentTruth;
use crate::association::MatchCandidate;
use crate::geometry::{wrap_angle, Vec2};
use crate::scene::{BBox, EntityId, FaceObservation, ImageSize, RobotState, VoiceObservation, VOICE_EMBEDDING_DIM};
use crate::tracker::{Camera, Detection};

pub const APPEARANCE_DIM: usize = 16;
const BODY_WIDTH: f64 = 0.5;
const FACE_WIDTH: f64 = 0.18;
const FACE_HEIGHT: f64 = 0.25;
/// A face unseen for longer than this many ticks comes back with a new id.
const FACE_MEMORY: u64 = 5;

/// A person detection before tracking.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BodyDetection {
    pub source: EntityId,
    pub bbox: BBox,
    pub feet_pixel: Vec2,
    /// Map frame.
    pub ground_pos: Vec2,
    /// Facing direction, map frame.
    pub orientation: f64,
    pub seated: bool,
    pub embedding: Vec<f64>,
}

impl BodyDetection {
    pub fn to_detection(&self) -> Detection {
        Detection {
            ground_pos: self.ground_pos,
            embedding: self.embedding.clone(),
            confidence: 1.0,
            source: self.source.clone(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Observations {
    pub detections: Vec<BodyDetection>,
    pub faces: Vec<FaceObservation>,
    pub voices: Vec<VoiceObservation>,
    /// Face↔detection candidates from box overlap.
    pub candidates: Vec<MatchCandidate>,
}

/// Persistent per-agent signatures and the feature ids handed out so far.
#[derive(Clone, Debug, Default)]
pub struct SensorState {
    signatures: BTreeMap<String, Signature>,
    faces: BTreeMap<String, (EntityId, u64)>,
    voices: BTreeMap<String, EntityId>,
    next_face: u64,
    next_voice: u64,
}

#[derive(Clone, Debug)]
struct Signature {
    body: Vec<f64>,
    face: Vec<f64>,
    voice: Vec<f64>,
}

fn unit_gaussian(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    normalise(v)
}

fn normalise(v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

fn signature(a: &AgentScript) -> Signature {
    let mut app = ChaCha8Rng::seed_from_u64(a.appearance_seed);
    let body = unit_gaussian(&mut app, APPEARANCE_DIM);
    app.set_stream(1);
    let face = unit_gaussian(&mut app, APPEARANCE_DIM);
    let mut voice_rng = ChaCha8Rng::seed_from_u64(a.voice_seed);
    voice_rng.set_stream(2);
    let voice = unit_gaussian(&mut voice_rng, VOICE_EMBEDDING_DIM);
    Signature { body, face, voice }
}

fn perturb(v: &[f64], noise: f64, rng: &mut impl Rng) -> Vec<f64> {
    if noise == 0.0 {
        return v.to_vec();
    }
    normalise(v.iter().map(|x| x + noise * rng.sample::<f64, _>(StandardNormal)).collect())
}

fn gauss(sigma: f64, rng: &mut impl Rng) -> f64 {
    if sigma == 0.0 {
        0.0
    } else {
        sigma * rng.sample::<f64, _>(StandardNormal)
    }
}

/// Image box of an upright person of `height` standing at `ground`
/// (robot frame), clipped to the image, with the feet pixel. A person too
/// close for their feet to be in view gets a box cut at the image bottom
/// and the feet pixel on that edge. `None` when out of view.
pub fn body_box(cam: &Camera, image: ImageSize, ground: Vec2, height: f64) -> Option<(BBox, Vec2)> {
    let (u, v) = cam.project_to_image(ground)?;
    if !(0.0..=image.width).contains(&u) || v < 0.0 {
        return None;
    }
    let v = v.min(image.height);
    let (_, top) = cam.project_point(ground.x, ground.y, height)?;
    let (ul, _) = cam.project_point(ground.x, ground.y + BODY_WIDTH / 2.0, height / 2.0)?;
    let (ur, _) = cam.project_point(ground.x, ground.y - BODY_WIDTH / 2.0, height / 2.0)?;
    let x0 = ul.min(ur).min(u).max(0.0);
    let x1 = ul.max(ur).max(u).min(image.width);
    let y0 = top.max(0.0);
    if x1 <= x0 || v <= y0 {
        return None;
    }
    Some((BBox { x: x0, y: y0, w: x1 - x0, h: v - y0 }, Vec2::new(u, v)))
}

/// Head box, only when it lies wholly inside the image.
pub fn face_box(cam: &Camera, image: ImageSize, ground: Vec2, height: f64) -> Option<BBox> {
    let (ul, top) = cam.project_point(ground.x, ground.y + FACE_WIDTH / 2.0, height)?;
    let (ur, bottom) = cam.project_point(ground.x, ground.y - FACE_WIDTH / 2.0, height - FACE_HEIGHT)?;
    let b = BBox { x: ul.min(ur), y: top, w: (ur - ul).abs(), h: bottom - top };
    (b.w > 0.0 && b.h > 0.0 && b.within(image)).then_some(b)
}

impl SensorState {
    fn signature(&mut self, a: &AgentScript) -> &Signature {
        self.signatures.entry(a.id.clone()).or_insert_with(|| signature(a))
    }

    fn face_id(&mut self, agent: &str, tick: u64) -> EntityId {
        if let Some((id, last)) = self.faces.get_mut(agent) {
            if tick.saturating_sub(*last) <= FACE_MEMORY {
                *last = tick;
                return id.clone();
            }
        }
        self.next_face += 1;
        let id = EntityId::face(format!("face_{}", self.next_face));
        self.faces.insert(agent.to_string(), (id.clone(), tick));
        id
    }

    fn voice_id(&mut self, agent: &str) -> EntityId {
        if let Some(id) = self.voices.get(agent) {
            return id.clone();
        }
        self.next_voice += 1;
        let id = EntityId::voice(format!("voice_{}", self.next_voice));
        self.voices.insert(agent.to_string(), id.clone());
        id
    }
}

/// Everything the sensors report for one tick. Agents are processed in
/// script order and every random draw happens in a fixed sequence, so a
/// seed fully determines the stream.
#[allow(clippy::too_many_arguments)]
pub fn emit_observations(
    scripts: &[AgentScript],
    truth: &[AgentTruth],
    robot: &RobotState,
    camera: &Camera,
    image: ImageSize,
    cfg: &SensorConfig,
    state: &mut SensorState,
    tick: u64,
    time: f64,
    rng: &mut impl Rng,
) -> Observations {
    let pose = robot.pose;
    let mut dets: Vec<(f64, BodyDetection)> = Vec::new();
    let mut faces = Vec::new();
    let speakers = truth.iter().filter(|a| a.speaking).count();
    let mut voices = Vec::new();

    for (script, a) in scripts.iter().zip(truth) {
        let sig = state.signature(script).clone();
        let local = pose.to_local(a.pose.position());
        let range = local.norm();
        let in_view = range <= cfg.body_range && body_box(camera, image, local, a.height()).is_some();

        if in_view && rng.random::<f64>() >= cfg.dropout.body {
            let noisy = a.pose.position() + Vec2::new(gauss(cfg.position_sigma, rng), gauss(cfg.position_sigma, rng));
            let orientation = wrap_angle(a.pose.theta + gauss(cfg.orientation_sigma_deg.to_radians(), rng));
            let embedding = perturb(&sig.body, cfg.embedding_noise, rng);
            if let Some((bbox, feet)) = body_box(camera, image, pose.to_local(noisy), a.height()) {
                dets.push((
                    feet.x,
                    BodyDetection {
                        source: EntityId::body("pending"),
                        bbox,
                        feet_pixel: feet,
                        ground_pos: noisy,
                        orientation,
                        seated: a.seated,
                        embedding,
                    },
                ));
            }
        }

        let facing = a.pose.bearing_to(pose.position()).abs() <= cfg.face_angle_deg.to_radians();
        if in_view && facing && range <= cfg.face_range {
            if let Some(bbox) = face_box(camera, image, local, a.height()) {
                if rng.random::<f64>() >= cfg.dropout.face {
                    let embedding = perturb(&sig.face, cfg.embedding_noise, rng);
                    let id = state.face_id(&a.id, tick);
                    faces.push(FaceObservation { id, bbox, embedding, confidence: 0.9 });
                }
            }
        }

        if a.speaking && !robot.speaking && rng.random::<f64>() >= cfg.dropout.voice {
            // A two-microphone array cannot tell front from back.
            let bearing = pose.bearing_to(a.pose.position());
            let doa = (bearing.sin().asin() + gauss(cfg.doa_sigma_deg.to_radians(), rng))
                .clamp(-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2);
            let embedding = perturb(&sig.voice, cfg.embedding_noise, rng);
            voices.push(VoiceObservation { id: state.voice_id(&a.id), doa, active: true, reliable: speakers == 1, embedding });
        }
    }

    // Detections are labelled left to right so ids carry no script order.
    dets.sort_by(|a, b| a.0.total_cmp(&b.0));
    let detections: Vec<BodyDetection> = dets
        .into_iter()
        .enumerate()
        .map(|(i, (_, mut d))| {
            d.source = EntityId::body(format!("det_{tick}_{i}"));
            d
        })
        .collect();
    faces.sort_by(|a, b| a.id.cmp(&b.id));
    voices.sort_by(|a, b| a.id.cmp(&b.id));

    let mut candidates = Vec::new();
    for f in &faces {
        for d in &detections {
            let overlap = f.bbox.intersection_area(&d.bbox) / f.bbox.area();
            if overlap > 0.0 {
                candidates.push(MatchCandidate::new(f.id.clone(), d.source.clone(), cfg.match_scale * overlap.min(1.0), time));
            }
        }
    }
    Observations { detections, faces, voices, candidates }
}
