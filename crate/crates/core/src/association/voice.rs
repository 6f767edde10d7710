//! Speaker identification by cosine similarity against stored voice
//! signatures.

use std::collections::BTreeMap;

use super::MatchCandidate;
use crate::scene::EntityId;

/// Enrolled voice signatures, one unit vector per person.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VoiceDatabase {
    entries: BTreeMap<EntityId, Vec<f64>>,
}

impl VoiceDatabase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, person: &EntityId) -> Option<&[f64]> {
        self.entries.get(person).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&EntityId, &[f64])> {
        self.entries.iter().map(|(k, v)| (k, v.as_slice()))
    }

    /// Stores `embedding` for `person`, replacing any previous signature.
    pub fn insert(&mut self, person: EntityId, embedding: Vec<f64>) {
        self.entries.insert(person, embedding);
    }

    /// Blends a new observation into a person's signature and renormalises.
    /// `rate` is the weight of the new observation.
    pub fn enroll(&mut self, person: EntityId, embedding: &[f64], rate: f64) {
        let entry = self.entries.entry(person).or_insert_with(|| embedding.to_vec());
        if entry.len() != embedding.len() {
            *entry = embedding.to_vec();
            return;
        }
        for (e, x) in entry.iter_mut().zip(embedding) {
            *e = (1.0 - rate) * *e + rate * x;
        }
        let n = entry.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.0 {
            entry.iter_mut().for_each(|x| *x /= n);
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VoiceMatch {
    pub person: EntityId,
    pub similarity: f64,
}

impl VoiceMatch {
    /// The voice↔person association this match implies.
    pub fn candidate(&self, voice: EntityId, time: f64) -> MatchCandidate {
        MatchCandidate::new(voice, self.person.clone(), self.similarity.clamp(0.0, 1.0), time)
    }
}

/// Best-matching enrolled person, if its cosine similarity exceeds
/// `threshold`. Equal similarities resolve to the smallest person id.
pub fn voice_match(embedding: &[f64], db: &VoiceDatabase, threshold: f64) -> Option<VoiceMatch> {
    let mut best: Option<VoiceMatch> = None;
    for (person, stored) in db.iter() {
        if stored.len() != embedding.len() {
            continue;
        }
        let similarity: f64 = stored.iter().zip(embedding).map(|(a, b)| a * b).sum();
        if best.as_ref().is_none_or(|b| similarity > b.similarity) {
            best = Some(VoiceMatch { person: person.clone(), similarity });
        }
    }
    best.filter(|b| b.similarity > threshold)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(dim: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        v
    }

    #[test]
    fn self_match() {
        let mut db = VoiceDatabase::new();
        db.insert(EntityId::person("p1"), basis(192, 3));
        let m = voice_match(&basis(192, 3), &db, 0.7).unwrap();
        assert_eq!(m.person, EntityId::person("p1"));
        assert_eq!(m.similarity, 1.0);
    }

    #[test]
    fn orthogonal_is_no_match() {
        let mut db = VoiceDatabase::new();
        db.insert(EntityId::person("p1"), basis(192, 3));
        assert!(voice_match(&basis(192, 4), &db, 0.7).is_none());
    }

    #[test]
    fn picks_the_most_similar_entry() {
        // Query e0; entries at cosine 0.9 and 0.8 with e0.
        let at = |c: f64| {
            let mut v = basis(192, 0);
            v[0] = c;
            v[1] = (1.0 - c * c).sqrt();
            v
        };
        let mut db = VoiceDatabase::new();
        db.insert(EntityId::person("a"), at(0.8));
        db.insert(EntityId::person("b"), at(0.9));
        let m = voice_match(&basis(192, 0), &db, 0.7).unwrap();
        assert_eq!(m.person, EntityId::person("b"));
        assert!((m.similarity - 0.9).abs() < 1e-12);
        let c = m.candidate(EntityId::voice("v1"), 2.0);
        assert!(c.check().is_ok());
    }

    #[test]
    fn threshold_is_strict() {
        let mut db = VoiceDatabase::new();
        db.insert(EntityId::person("p"), basis(4, 0));
        assert!(voice_match(&basis(4, 0), &db, 1.0).is_none());
    }

    #[test]
    fn enroll_keeps_unit_norm() {
        let mut db = VoiceDatabase::new();
        db.enroll(EntityId::person("p"), &basis(4, 0), 0.2);
        db.enroll(EntityId::person("p"), &basis(4, 1), 0.2);
        let v = db.get(&EntityId::person("p")).unwrap();
        let n: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((n - 1.0).abs() < 1e-12);
        assert!(v[0] > v[1]);
    }
}
