//! Independent reference implementations used as test oracles, plus
//! generators for random inputs. Nothing here calls the code under test.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use sse_core::association::{MatchCandidate, RelationGraph};
use sse_core::geometry::{Pose2, Vec2};
use sse_core::scene::{EntityId, EntityKind};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- assignment

/// Minimum-cost assignment by enumerating every injective map from the
/// smaller side into the larger one. Forbidden (infinite) entries are
/// skipped; more assigned pairs beat fewer, then lower cost wins.
/// Returns (pairs, cost).
pub fn brute_force_assignment(cost: &[Vec<f64>]) -> (usize, f64) {
    let n = cost.len();
    let m = cost.first().map_or(0, Vec::len);
    let transposed = n > m;
    let (rows, cols) = if transposed { (m, n) } else { (n, m) };
    let at = |r: usize, c: usize| if transposed { cost[c][r] } else { cost[r][c] };

    fn go(
        r: usize,
        rows: usize,
        cols: usize,
        used: &mut Vec<bool>,
        pairs: usize,
        total: f64,
        at: &dyn Fn(usize, usize) -> f64,
        best: &mut (usize, f64),
    ) {
        if r == rows {
            if pairs > best.0 || (pairs == best.0 && total < best.1) {
                *best = (pairs, total);
            }
            return;
        }
        go(r + 1, rows, cols, used, pairs, total, at, best);
        for c in 0..cols {
            let v = at(r, c);
            if !used[c] && v.is_finite() {
                used[c] = true;
                go(r + 1, rows, cols, used, pairs + 1, total + v, at, best);
                used[c] = false;
            }
        }
    }
    let mut best = (0, 0.0);
    go(0, rows, cols, &mut vec![false; cols], 0, 0.0, &at, &mut best);
    best
}

pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize, m: usize, forbid: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            (0..m)
                .map(|_| if rng.random_bool(forbid) { f64::INFINITY } else { (rng.random_range(0.0..10.0f64) * 4.0).round() / 4.0 })
                .collect()
        })
        .collect()
}

// ----------------------------------------------------------------- partition

/// Exhaustive optimum over all subsets of positive identity edges. Returns
/// (best affinity, fewest kept edges among optimal subsets). Group edges
/// contribute each body's strongest group link.
pub fn exhaustive_partition(g: &RelationGraph) -> (f64, usize) {
    let ids: Vec<&EntityId> = g.nodes().map(|(id, _)| id).collect();
    let index: BTreeMap<&EntityId, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let identity: Vec<(usize, usize, f64)> = g
        .edges()
        .filter(|(k, e)| k.a.kind != EntityKind::Group && k.b.kind != EntityKind::Group && e.likelihood > 0.0)
        .map(|(k, e)| (index[&k.a], index[&k.b], e.likelihood))
        .collect();
    assert!(identity.len() <= 20, "too many edges for enumeration");

    let mut best = (0.0f64, 0usize);
    for mask in 0u32..(1 << identity.len()) {
        let mut label: Vec<usize> = (0..ids.len()).collect();
        fn root(label: &mut [usize], mut x: usize) -> usize {
            while label[x] != x {
                x = label[x];
            }
            x
        }
        let mut total = 0.0;
        for (i, &(a, b, w)) in identity.iter().enumerate() {
            if mask >> i & 1 == 1 {
                let (ra, rb) = (root(&mut label, a), root(&mut label, b));
                if ra != rb {
                    label[ra] = rb;
                }
                total += w;
            }
        }
        let mut seen: BTreeMap<(usize, EntityKind), usize> = BTreeMap::new();
        let valid = (0..ids.len()).all(|i| {
            let r = root(&mut label, i);
            let c = seen.entry((r, ids[i].kind)).or_insert(0);
            *c += 1;
            *c == 1
        });
        let count = mask.count_ones() as usize;
        if valid && (total > best.0 + 1e-9 || ((total - best.0).abs() <= 1e-9 && count < best.1)) {
            best = (total, count);
        }
    }

    let mut group_best: BTreeMap<&EntityId, f64> = BTreeMap::new();
    for (k, e) in g.edges() {
        let body = match (k.a.kind, k.b.kind) {
            (EntityKind::Body, EntityKind::Group) => &k.a,
            (EntityKind::Group, EntityKind::Body) => &k.b,
            _ => continue,
        };
        if e.likelihood > 0.0 {
            let slot = group_best.entry(body).or_insert(0.0);
            *slot = slot.max(e.likelihood);
        }
    }
    (best.0 + group_best.values().sum::<f64>(), best.1 + group_best.len())
}

/// Random relation graph with at most `max_features` feature nodes, a few
/// persons and optionally groups. Likelihoods are quantised to tenths so
/// ties are common.
pub fn random_graph(rng: &mut ChaCha8Rng, max_features: usize, max_edges: usize, with_groups: bool) -> RelationGraph {
    let nf = rng.random_range(1..=max_features);
    let mut nodes = Vec::new();
    for i in 0..nf {
        let kind = [EntityKind::Face, EntityKind::Body, EntityKind::Voice][rng.random_range(0..3)];
        nodes.push(EntityId::new(kind, format!("n{i}")));
    }
    for i in 0..rng.random_range(0..=3) {
        nodes.push(EntityId::person(format!("p{i}")));
    }
    if with_groups {
        for i in 0..rng.random_range(0..=2) {
            nodes.push(EntityId::group(format!("g{i}")));
        }
    }
    let mut pairs = Vec::new();
    for i in 0..nodes.len() {
        for j in i + 1..nodes.len() {
            if sse_core::association::admissible(nodes[i].kind, nodes[j].kind) {
                pairs.push((nodes[i].clone(), nodes[j].clone()));
            }
        }
    }
    let density = rng.random_range(0.2..0.8);
    let mut g = RelationGraph::new();
    for n in &nodes {
        if n.kind == EntityKind::Group {
            g.upsert_group(n.clone(), Vec2::ZERO);
        } else {
            g.add_node(n.clone());
        }
    }
    let mut identity = 0;
    for (a, b) in pairs {
        if !rng.random_bool(density) {
            continue;
        }
        let is_identity = a.kind != EntityKind::Group && b.kind != EntityKind::Group;
        if is_identity {
            if identity >= max_edges {
                continue;
            }
            identity += 1;
        }
        let l = rng.random_range(0..=10) as f64 / 10.0;
        g.submit_match(&MatchCandidate::new(a, b, l, 0.0)).unwrap();
    }
    g
}

// -------------------------------------------------------------------- groups

/// All set partitions of `0..n` as label vectors (restricted growth strings).
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn go(i: usize, n: usize, cur: &mut Vec<usize>, max: usize, out: &mut Vec<Vec<usize>>) {
        if i == n {
            out.push(cur.clone());
            return;
        }
        for l in 0..=max {
            cur.push(l);
            go(i + 1, n, cur, if l == max { max + 1 } else { max }, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, &mut Vec::new(), 0, &mut out);
    out
}

/// Group objective evaluated directly from its definition.
pub fn group_objective(poses: &[Pose2], labels: &[usize], stride: f64, sigma: f64, mdl: f64) -> f64 {
    let cand: Vec<Vec2> = poses.iter().map(|p| p.position() + Vec2::from_polar(stride, p.theta)).collect();
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut total = mdl * k as f64;
    for g in 0..k {
        let members: Vec<Vec2> = (0..poses.len()).filter(|&i| labels[i] == g).map(|i| cand[i]).collect();
        let c = members.iter().fold(Vec2::ZERO, |s, &v| s + v) * (1.0 / members.len() as f64);
        total += members.iter().map(|m| (*m - c).norm_sq()).sum::<f64>() / (sigma * sigma);
    }
    total
}

/// Exhaustive minimum of the group objective.
pub fn exhaustive_groups(poses: &[Pose2], stride: f64, sigma: f64, mdl: f64) -> (f64, Vec<usize>) {
    set_partitions(poses.len())
        .into_iter()
        .map(|l| (group_objective(poses, &l, stride, sigma, mdl), l))
        .fold((f64::INFINITY, Vec::new()), |best, cur| if cur.0 < best.0 - 1e-9 { cur } else { best })
}

// --------------------------------------------------------------------- audio

/// Stereo frame pair for a far-field source at bearing `theta` (radians,
/// positive towards the first microphone) with white Gaussian sensor noise
/// at the given SNR per channel. The fractional delay is applied as a
/// linear phase ramp on a longer buffer, of which a central slice is kept.
pub fn far_field_pair(
    rng: &mut ChaCha8Rng,
    theta: f64,
    n: usize,
    spacing: f64,
    c: f64,
    fs: f64,
    snr_db: f64,
) -> (Vec<f64>, Vec<f64>) {
    let len = 4 * n;
    let src: Vec<f64> = (0..len).map(|_| StandardNormal.sample(rng)).collect();
    let delay = spacing * theta.sin() / c * fs;

    let mut planner = FftPlanner::<f64>::new();
    let mut spec: Vec<Complex<f64>> = src.iter().map(|&v| Complex::new(v, 0.0)).collect();
    planner.plan_fft_forward(len).process(&mut spec);
    for (k, s) in spec.iter_mut().enumerate() {
        let f = if k <= len / 2 { k as f64 } else { k as f64 - len as f64 };
        let phase = -2.0 * std::f64::consts::PI * f * delay / len as f64;
        *s *= Complex::from_polar(1.0, phase);
        if k == len / 2 {
            *s = Complex::new(s.re, 0.0);
        }
    }
    planner.plan_fft_inverse(len).process(&mut spec);
    let shifted: Vec<f64> = spec.iter().map(|v| v.re / len as f64).collect();

    let noise_sd = 10f64.powf(-snr_db / 20.0);
    let start = len / 2 - n / 2;
    let mut x: Vec<f64> = src[start..start + n].to_vec();
    let mut y: Vec<f64> = shifted[start..start + n].to_vec();
    for v in x.iter_mut().chain(y.iter_mut()) {
        let e: f64 = StandardNormal.sample(rng);
        *v += noise_sd * e;
    }
    (x, y)
}

/// Normalised cross-correlation of `y` against `x` at integer lags in
/// `-max..=max`; returns the lag with the largest value.
pub fn brute_force_integer_lag(x: &[f64], y: &[f64], max: isize) -> isize {
    let n = x.len() as isize;
    (-max..=max)
        .map(|lag| {
            let mut s = 0.0;
            let (mut ex, mut ey) = (0.0, 0.0);
            for i in 0..n {
                let j = i + lag;
                if (0..n).contains(&j) {
                    s += x[i as usize] * y[j as usize];
                    ex += x[i as usize].powi(2);
                    ey += y[j as usize].powi(2);
                }
            }
            (lag, s / (ex * ey).sqrt().max(1e-300))
        })
        .fold((0, f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b })
        .0
}
