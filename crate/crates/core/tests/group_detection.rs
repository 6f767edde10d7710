mod common;

use std::f64::consts::PI;

use proptest::prelude::*;
use rand::Rng;

use sse_core::geometry::{Pose2, Vec2};
use sse_core::groups::{detect_groups, group_labels, o_space_candidate, objective, GcffParams};
use sse_core::scene::EntityId;

use common::{exhaustive_groups, group_objective, rng};

/// Random scene of people standing in a small room, some arranged around
/// shared centres so that multi-person groups actually occur.
fn random_scene(seed: u64, n: usize) -> Vec<Pose2> {
    let mut r = rng(seed);
    let centres: Vec<Vec2> = (0..2).map(|_| Vec2::new(r.random_range(0.0..4.0), r.random_range(0.0..4.0))).collect();
    (0..n)
        .map(|_| {
            if r.random_bool(0.6) {
                let c = centres[r.random_range(0..2)];
                let a = r.random_range(-PI..PI);
                let pos = c + Vec2::from_polar(0.7 + r.random_range(-0.15..0.15), a);
                Pose2::new(pos.x, pos.y, (c - pos).angle() + r.random_range(-0.3..0.3))
            } else {
                Pose2::new(r.random_range(0.0..4.0), r.random_range(0.0..4.0), r.random_range(-PI..PI))
            }
        })
        .collect()
}

fn candidates(poses: &[Pose2], p: &GcffParams) -> Vec<Vec2> {
    poses.iter().map(|q| o_space_candidate(q, p.stride)).collect()
}

#[test]
fn matches_exhaustive_optimum_on_small_scenes() {
    let p = GcffParams::default();
    for seed in 0..100u64 {
        let n = 1 + (seed as usize % 6);
        let poses = random_scene(seed, n);
        let labels = group_labels(&poses, &p);
        let got = group_objective(&poses, &labels, p.stride, p.sigma, p.mdl);
        let (best, _) = exhaustive_groups(&poses, p.stride, p.sigma, p.mdl);
        assert!((got - best).abs() < 1e-6, "seed {seed}: {got} vs {best}");
    }
}

#[test]
fn objective_agrees_with_direct_definition() {
    let p = GcffParams { stride: 0.6, mdl: 20.0, sigma: 0.2 };
    let poses = random_scene(5, 5);
    let labels = vec![0, 1, 0, 2, 1];
    let direct = group_objective(&poses, &labels, p.stride, p.sigma, p.mdl);
    assert!((objective(&candidates(&poses, &p), &labels, &p) - direct).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn beats_trivial_baselines_and_partitions(seed in 0u64..100_000, n in 0usize..12) {
        let p = GcffParams::default();
        let poses = random_scene(seed, n);
        let labels = group_labels(&poses, &p);
        let c = candidates(&poses, &p);
        let e = objective(&c, &labels, &p);
        prop_assert!(e <= objective(&c, &(0..n).collect::<Vec<_>>(), &p) + 1e-9);
        prop_assert!(e <= objective(&c, &vec![0; n], &p) + 1e-9);

        let persons: Vec<(EntityId, Pose2)> =
            poses.iter().enumerate().map(|(i, q)| (EntityId::person(format!("p{i:02}")), *q)).collect();
        let groups = detect_groups(&persons, &p);
        let mut seen = std::collections::BTreeSet::new();
        for g in &groups {
            prop_assert!(!g.members.is_empty());
            for m in &g.members {
                prop_assert!(seen.insert(m.clone()), "{} in two groups", m);
            }
        }
        prop_assert_eq!(seen.len(), n);
    }

    #[test]
    fn rigid_motion_equivariance(seed in 0u64..100_000, n in 1usize..7, rot in -PI..PI, tx in -5.0f64..5.0, ty in -5.0f64..5.0) {
        let p = GcffParams::default();
        let poses = random_scene(seed, n);
        let moved: Vec<Pose2> = poses
            .iter()
            .map(|q| {
                let v = q.position().rotate(rot) + Vec2::new(tx, ty);
                Pose2::new(v.x, v.y, q.theta + rot)
            })
            .collect();
        let name = |ps: &[Pose2]| -> Vec<(EntityId, Pose2)> {
            ps.iter().enumerate().map(|(i, q)| (EntityId::person(format!("p{i}")), *q)).collect()
        };
        let a = detect_groups(&name(&poses), &p);
        let b = detect_groups(&name(&moved), &p);
        prop_assert_eq!(a.len(), b.len());
        for (ga, gb) in a.iter().zip(&b) {
            prop_assert_eq!(&ga.members, &gb.members);
            let expect = ga.center.rotate(rot) + Vec2::new(tx, ty);
            prop_assert!(expect.dist(gb.center) < 1e-9);
        }
    }
}
