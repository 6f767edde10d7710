mod common;

use proptest::prelude::*;
use sse_core::audio::{gcc_phat, gcc_phat_with, tdoa_to_doa, GccConfig, MicPairGeometry};

use common::{brute_force_integer_lag, far_field_pair, rng};

fn delayed(seed: u64, n: usize, delay: usize) -> (Vec<f64>, Vec<f64>) {
    let mut r = rng(seed);
    let (src, _) = far_field_pair(&mut r, 0.0, n + 64, 0.1, 343.0, 16_000.0, 200.0);
    (src[32..32 + n].to_vec(), src[32 - delay..32 - delay + n].to_vec())
}

#[test]
fn integer_delay_matches_brute_force_correlation() {
    let g = MicPairGeometry::default();
    for (seed, d) in [(1, 0), (2, 1), (3, 2), (4, 3), (5, 4)] {
        let (x, y) = delayed(seed, 1024, d);
        let oracle = brute_force_integer_lag(&x, &y, 5);
        let est = gcc_phat(&x, &y, &g).unwrap();
        assert_eq!(oracle, d as isize);
        assert!((est.tau * g.sample_rate - oracle as f64).abs() <= 0.5, "delay {d}: tau {}", est.tau);
    }
}

#[test]
fn far_field_source_bearing() {
    let g = MicPairGeometry::default();
    let mut r = rng(9);
    for deg in [-40.0f64, 0.0, 25.0] {
        let (x, y) = far_field_pair(&mut r, deg.to_radians(), 1024, g.spacing, g.speed_of_sound, g.sample_rate, 30.0);
        let theta = tdoa_to_doa(gcc_phat(&x, &y, &g).unwrap().tau, &g).unwrap();
        assert!((theta.to_degrees() - deg).abs() < 2.0, "{deg}: {}", theta.to_degrees());
    }
}

#[test]
fn two_equal_sources_are_unreliable() {
    let g = MicPairGeometry::default();
    let mut r = rng(11);
    let mut unreliable = 0;
    for _ in 0..20 {
        let (x1, y1) = far_field_pair(&mut r, (-45f64).to_radians(), 1024, 0.1, 343.0, 16_000.0, 40.0);
        let (x2, y2) = far_field_pair(&mut r, 45f64.to_radians(), 1024, 0.1, 343.0, 16_000.0, 40.0);
        let x: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| a + b).collect();
        let y: Vec<f64> = y1.iter().zip(&y2).map(|(a, b)| a + b).collect();
        if !gcc_phat(&x, &y, &g).unwrap().reliable {
            unreliable += 1;
        }
    }
    assert!(unreliable >= 18, "{unreliable} of 20 flagged");

    let mut reliable = 0;
    for _ in 0..20 {
        let (x, y) = far_field_pair(&mut r, 0.3, 1024, 0.1, 343.0, 16_000.0, 10.0);
        if gcc_phat(&x, &y, &g).unwrap().reliable {
            reliable += 1;
        }
    }
    assert!(reliable >= 18, "{reliable} of 20 single-source frames reliable");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn scaling_channels_keeps_delay(seed in 0u64..1000, a in 0.01f64..100.0, b in 0.01f64..100.0, deg in -70.0f64..70.0) {
        let g = MicPairGeometry::default();
        let mut r = rng(seed);
        let (x, y) = far_field_pair(&mut r, deg.to_radians(), 512, 0.1, 343.0, 16_000.0, 10.0);
        let xs: Vec<f64> = x.iter().map(|v| a * v).collect();
        let ys: Vec<f64> = y.iter().map(|v| b * v).collect();
        let t0 = gcc_phat(&x, &y, &g).unwrap().tau;
        let t1 = gcc_phat(&xs, &ys, &g).unwrap().tau;
        prop_assert!((t0 - t1).abs() * g.sample_rate <= 1.0);
    }

    #[test]
    fn swapping_channels_negates(seed in 0u64..1000, deg in -70.0f64..70.0) {
        let g = MicPairGeometry::default();
        let mut r = rng(seed);
        let (x, y) = far_field_pair(&mut r, deg.to_radians(), 512, 0.1, 343.0, 16_000.0, 10.0);
        let a = gcc_phat(&x, &y, &g).unwrap().tau;
        let b = gcc_phat(&y, &x, &g).unwrap().tau;
        prop_assert!((a + b).abs() * g.sample_rate <= 1.0);
    }

    #[test]
    fn delay_stays_physical(seed in 0u64..1000, up in 1usize..20) {
        let g = MicPairGeometry::default();
        let mut r = rng(seed);
        let (x, _) = far_field_pair(&mut r, 0.0, 512, 0.1, 343.0, 16_000.0, 0.0);
        let (y, _) = far_field_pair(&mut r, 0.0, 512, 0.1, 343.0, 16_000.0, 0.0);
        let cfg = GccConfig { upsample: up, ..GccConfig::default() };
        let est = gcc_phat_with(&x, &y, &g, &cfg, 0.0).unwrap();
        prop_assert!(est.tau.abs() <= g.max_tau() + 1.0 / g.sample_rate + 1e-15);
        prop_assert!(tdoa_to_doa(est.tau, &g).is_ok() || est.tau.abs() > 1.02 * g.max_tau());
    }
}
