//! Shared entity model: features, persons, groups, the robot, and the
//! per-tick [`SceneSnapshot`] every stage of the pipeline exchanges.
//!
//! Feature ids (face, body, voice) are transient and may vanish between
//! snapshots. Person ids are persistent for the lifetime of a run.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::geometry::{is_wrapped, Pose2, Vec2};

/// Fixed dimension of speaker embeddings.
pub const VOICE_EMBEDDING_DIM: usize = 192;

const UNIT_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    Face,
    Body,
    Voice,
    Person,
    Group,
}

impl EntityKind {
    pub fn is_feature(self) -> bool {
        matches!(self, EntityKind::Face | EntityKind::Body | EntityKind::Voice)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::Face => "face",
            EntityKind::Body => "body",
            EntityKind::Voice => "voice",
            EntityKind::Person => "person",
            EntityKind::Group => "group",
        }
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntityKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "face" => EntityKind::Face,
            "body" => EntityKind::Body,
            "voice" => EntityKind::Voice,
            "person" => EntityKind::Person,
            "group" => EntityKind::Group,
            other => return Err(format!("unknown entity kind `{other}`")),
        })
    }
}

/// Identifier of any entity: a kind plus an opaque token.
///
/// Serialised as `"kind:token"`, e.g. `"face:face_432"`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntityId {
    pub kind: EntityKind,
    pub token: String,
}

impl EntityId {
    pub fn new(kind: EntityKind, token: impl Into<String>) -> Self {
        Self { kind, token: token.into() }
    }

    pub fn face(token: impl Into<String>) -> Self {
        Self::new(EntityKind::Face, token)
    }

    pub fn body(token: impl Into<String>) -> Self {
        Self::new(EntityKind::Body, token)
    }

    pub fn voice(token: impl Into<String>) -> Self {
        Self::new(EntityKind::Voice, token)
    }

    pub fn person(token: impl Into<String>) -> Self {
        Self::new(EntityKind::Person, token)
    }

    pub fn group(token: impl Into<String>) -> Self {
        Self::new(EntityKind::Group, token)
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.token)
    }
}

impl FromStr for EntityId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, token) = s
            .split_once(':')
            .ok_or_else(|| format!("entity id `{s}` is not of the form kind:token"))?;
        if token.is_empty() {
            return Err(format!("entity id `{s}` has an empty token"));
        }
        Ok(EntityId::new(kind.parse()?, token))
    }
}

impl Serialize for EntityId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{}:{}", self.kind, self.token))
    }
}

impl<'de> Deserialize<'de> for EntityId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Axis-aligned image rectangle in pixels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn area(&self) -> f64 {
        self.w.max(0.0) * self.h.max(0.0)
    }

    pub fn intersection_area(&self, o: &BBox) -> f64 {
        let x0 = self.x.max(o.x);
        let y0 = self.y.max(o.y);
        let x1 = (self.x + self.w).min(o.x + o.w);
        let y1 = (self.y + self.h).min(o.y + o.h);
        (x1 - x0).max(0.0) * (y1 - y0).max(0.0)
    }

    /// Lies wholly inside an image of the given size.
    pub fn within(&self, size: ImageSize) -> bool {
        self.w >= 0.0
            && self.h >= 0.0
            && self.x >= 0.0
            && self.y >= 0.0
            && self.x + self.w <= size.width
            && self.y + self.h <= size.height
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageSize {
    pub width: f64,
    pub height: f64,
}

impl Default for ImageSize {
    fn default() -> Self {
        Self { width: 1280.0, height: 720.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaceObservation {
    pub id: EntityId,
    pub bbox: BBox,
    pub embedding: Vec<f64>,
    pub confidence: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BodyObservation {
    pub id: EntityId,
    pub bbox: BBox,
    pub feet_pixel: Vec2,
    /// Map-frame ground position, filled in by the tracker.
    pub ground_pos: Option<Vec2>,
    /// Facing direction in the map frame.
    pub orientation: Option<f64>,
    pub embedding: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VoiceObservation {
    pub id: EntityId,
    /// Direction of arrival relative to the robot heading.
    pub doa: f64,
    pub active: bool,
    /// False when the localiser saw more than one dominant source.
    pub reliable: bool,
    pub embedding: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PersonRecord {
    pub id: EntityId,
    pub face: Option<EntityId>,
    pub body: Option<EntityId>,
    pub voice: Option<EntityId>,
    pub anonymous: bool,
}

impl PersonRecord {
    pub fn features(&self) -> impl Iterator<Item = &EntityId> {
        self.face.iter().chain(self.body.iter()).chain(self.voice.iter())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupRecord {
    pub id: EntityId,
    pub members: BTreeSet<EntityId>,
    pub center: Vec2,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub pose: Pose2,
    /// Linear velocity in m/s.
    pub v: f64,
    /// Angular velocity in rad/s.
    pub omega: f64,
    pub speaking: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SceneSnapshot {
    pub time: f64,
    pub image: ImageSize,
    pub faces: Vec<FaceObservation>,
    pub bodies: Vec<BodyObservation>,
    pub voices: Vec<VoiceObservation>,
    pub persons: Vec<PersonRecord>,
    pub groups: Vec<GroupRecord>,
    pub robot: RobotState,
    /// Features that left the observation lists but are still referenced.
    pub stale: Vec<EntityId>,
}

impl SceneSnapshot {
    pub fn empty(time: f64) -> Self {
        Self { time, ..Default::default() }
    }

    pub fn person(&self, id: &EntityId) -> Option<&PersonRecord> {
        self.persons.iter().find(|p| &p.id == id)
    }

    pub fn group(&self, id: &EntityId) -> Option<&GroupRecord> {
        self.groups.iter().find(|g| &g.id == id)
    }

    pub fn body(&self, id: &EntityId) -> Option<&BodyObservation> {
        self.bodies.iter().find(|b| &b.id == id)
    }

    pub fn voice(&self, id: &EntityId) -> Option<&VoiceObservation> {
        self.voices.iter().find(|v| &v.id == id)
    }

    /// Ground position and orientation of a person, via its bound body.
    pub fn person_pose(&self, id: &EntityId) -> Option<Pose2> {
        let body = self.body(self.person(id)?.body.as_ref()?)?;
        let pos = body.ground_pos?;
        Some(Pose2::new(pos.x, pos.y, body.orientation.unwrap_or(0.0)))
    }

    /// The group a person belongs to, if any.
    pub fn group_of(&self, person: &EntityId) -> Option<&GroupRecord> {
        self.groups.iter().find(|g| g.members.contains(person))
    }

    /// Stable JSON encoding (field order follows declaration order).
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("snapshot serialisation is infallible")
    }
}

/// One broken invariant, naming the offending entity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub entity: String,
    pub message: String,
}

impl Violation {
    fn new(entity: impl fmt::Display, message: impl Into<String>) -> Self {
        Self { entity: entity.to_string(), message: message.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.entity, self.message)
    }
}

fn label(id: &EntityId) -> String {
    format!("{} {}", id.kind, id.token)
}

fn is_unit(v: &[f64]) -> bool {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    !v.is_empty() && (n - 1.0).abs() <= UNIT_TOLERANCE
}

/// Checks every snapshot invariant. Returns an empty list iff all hold.
pub fn validate_snapshot(s: &SceneSnapshot) -> Vec<Violation> {
    let mut out = Vec::new();

    if !s.time.is_finite() {
        out.push(Violation::new("snapshot", "non-finite time"));
    }

    let mut seen: BTreeSet<&EntityId> = BTreeSet::new();
    fn check_id<'a>(
        seen: &mut BTreeSet<&'a EntityId>,
        id: &'a EntityId,
        expected: EntityKind,
        out: &mut Vec<Violation>,
    ) {
        if id.kind != expected {
            out.push(Violation::new(label(id), format!("listed as a {expected}")));
        }
        if !seen.insert(id) {
            out.push(Violation::new(label(id), "duplicate id"));
        }
    }

    for f in &s.faces {
        check_id(&mut seen, &f.id, EntityKind::Face, &mut out);
        if !f.bbox.within(s.image) {
            out.push(Violation::new(label(&f.id), "bbox outside image bounds"));
        }
        if !is_unit(&f.embedding) {
            out.push(Violation::new(label(&f.id), "embedding is not unit norm"));
        }
        if !(0.0..=1.0).contains(&f.confidence) {
            out.push(Violation::new(label(&f.id), "confidence outside [0,1]"));
        }
    }

    for b in &s.bodies {
        check_id(&mut seen, &b.id, EntityKind::Body, &mut out);
        if !b.bbox.within(s.image) {
            out.push(Violation::new(label(&b.id), "bbox outside image bounds"));
        }
        let bb = &b.bbox;
        let fu = b.feet_pixel.x;
        let fv = b.feet_pixel.y;
        // Box corners are sums of floats; allow rounding.
        const EPS: f64 = 1e-6;
        if !(fu >= bb.x - EPS && fu <= bb.x + bb.w + EPS && fv >= bb.y + 0.75 * bb.h - EPS && fv <= bb.y + bb.h + EPS) {
            out.push(Violation::new(label(&b.id), "feet pixel outside bbox bottom quarter"));
        }
        if let Some(o) = b.orientation {
            if !is_wrapped(o) {
                out.push(Violation::new(label(&b.id), "orientation outside (-pi, pi]"));
            }
        }
        if let Some(p) = b.ground_pos {
            if !p.is_finite() {
                out.push(Violation::new(label(&b.id), "non-finite ground position"));
            }
        }
        if !is_unit(&b.embedding) {
            out.push(Violation::new(label(&b.id), "embedding is not unit norm"));
        }
    }

    for v in &s.voices {
        check_id(&mut seen, &v.id, EntityKind::Voice, &mut out);
        if !(v.doa.is_finite() && v.doa.abs() <= std::f64::consts::FRAC_PI_2) {
            out.push(Violation::new(label(&v.id), "doa outside the frontal half-plane"));
        }
        if v.embedding.len() != VOICE_EMBEDDING_DIM {
            out.push(Violation::new(
                label(&v.id),
                format!("embedding has dimension {} (expected {VOICE_EMBEDDING_DIM})", v.embedding.len()),
            ));
        } else if !is_unit(&v.embedding) {
            out.push(Violation::new(label(&v.id), "embedding is not unit norm"));
        }
    }

    let stale: BTreeSet<&EntityId> = s.stale.iter().collect();
    let mut owner: BTreeMap<&EntityId, &EntityId> = BTreeMap::new();
    for p in &s.persons {
        check_id(&mut seen, &p.id, EntityKind::Person, &mut out);
        let slots = [
            ("face", EntityKind::Face, &p.face),
            ("body", EntityKind::Body, &p.body),
            ("voice", EntityKind::Voice, &p.voice),
        ];
        let mut bound = 0;
        for (slot, kind, feature) in slots {
            let Some(f) = feature else { continue };
            bound += 1;
            if f.kind != kind {
                out.push(Violation::new(label(&p.id), format!("{slot} slot holds {}", label(f))));
                continue;
            }
            if !seen.contains(f) && !stale.contains(f) {
                out.push(Violation::new(label(&p.id), format!("dangling {slot} {}", f.token)));
            }
            if let Some(prev) = owner.insert(f, &p.id) {
                out.push(Violation::new(
                    label(f),
                    format!("bound to both person {} and person {}", prev.token, p.id.token),
                ));
            }
        }
        if bound == 0 {
            out.push(Violation::new(label(&p.id), "no bound features"));
        }
    }

    let persons: BTreeSet<&EntityId> = s.persons.iter().map(|p| &p.id).collect();
    let mut membership: BTreeMap<&EntityId, &EntityId> = BTreeMap::new();
    for g in &s.groups {
        check_id(&mut seen, &g.id, EntityKind::Group, &mut out);
        if g.members.is_empty() {
            out.push(Violation::new(label(&g.id), "no members"));
        }
        if !g.center.is_finite() {
            out.push(Violation::new(label(&g.id), "non-finite centre"));
        }
        for m in &g.members {
            if !persons.contains(m) {
                out.push(Violation::new(label(&g.id), format!("unknown member {}", m.token)));
            }
            if let Some(prev) = membership.insert(m, &g.id) {
                out.push(Violation::new(
                    label(m),
                    format!("member of both group {} and group {}", prev.token, g.id.token),
                ));
            }
        }
    }

    let pose = s.robot.pose;
    if !(pose.x.is_finite() && pose.y.is_finite() && is_wrapped(pose.theta)) {
        out.push(Violation::new("robot", "pose not finite or heading outside (-pi, pi]"));
    }

    out
}

/// Checks the cross-snapshot ordering invariant of a run.
pub fn validate_sequence<'a>(snapshots: impl IntoIterator<Item = &'a SceneSnapshot>) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut last: Option<f64> = None;
    for s in snapshots {
        if let Some(t) = last {
            if s.time <= t {
                out.push(Violation::new(
                    "snapshot",
                    format!("time {} does not increase past {}", s.time, t),
                ));
            }
        }
        last = Some(s.time);
    }
    out
}
