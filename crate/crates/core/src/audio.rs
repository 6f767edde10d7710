//! Sound source localisation with a two-microphone array: GCC-PHAT time
//! difference of arrival, its far-field conversion to a bearing, and an
//! energy-based voice activity gate.
//!
//! A positive `tau` means the second channel lags the first, so a source
//! on the side of the first microphone has positive bearing.

use std::f64::consts::FRAC_PI_2;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Shortest frame accepted by [`gcc_phat`].
pub const MIN_FRAME: usize = 256;

#[derive(Debug, Error, PartialEq)]
pub enum AudioError {
    #[error("frame energy below the floor")]
    DegenerateSignal,
    #[error("invalid frame: {0}")]
    InvalidFrame(String),
    #[error("normalised delay {0} outside [-1, 1]")]
    OutOfRange(f64),
    #[error("invalid array geometry: {0}")]
    InvalidGeometry(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MicPairGeometry {
    /// Microphone spacing in metres.
    pub spacing: f64,
    pub speed_of_sound: f64,
    pub sample_rate: f64,
}

impl Default for MicPairGeometry {
    fn default() -> Self {
        Self { spacing: 0.1, speed_of_sound: 343.0, sample_rate: 16_000.0 }
    }
}

impl MicPairGeometry {
    pub fn check(&self) -> Result<(), AudioError> {
        for (name, v) in [("spacing", self.spacing), ("speed_of_sound", self.speed_of_sound), ("sample_rate", self.sample_rate)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(AudioError::InvalidGeometry(format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    /// Largest physically possible delay, `d / c`.
    pub fn max_tau(&self) -> f64 {
        self.spacing / self.speed_of_sound
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GccConfig {
    /// Cross-spectrum is zero-padded by this factor before the inverse
    /// transform, giving a finer lag grid for the peak search.
    pub upsample: usize,
    /// Frames whose mean square is below this are rejected.
    pub energy_floor: f64,
    /// Second-peak to first-peak ratio above which a frame is unreliable.
    pub reliability_ratio: f64,
}

impl Default for GccConfig {
    fn default() -> Self {
        Self { upsample: 16, energy_floor: 1e-12, reliability_ratio: 0.7 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TdoaEstimate {
    /// Delay of the second channel relative to the first, seconds.
    pub tau: f64,
    /// Height of the normalised correlation peak, at most 1.
    pub peak_value: f64,
    pub frame_time: f64,
    /// False when a second correlation peak comes close to the first.
    pub reliable: bool,
}

fn mean_square(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>() / x.len().max(1) as f64
}

/// GCC-PHAT delay estimate with the default [`GccConfig`].
pub fn gcc_phat(x: &[f64], y: &[f64], geom: &MicPairGeometry) -> Result<TdoaEstimate, AudioError> {
    gcc_phat_with(x, y, geom, &GccConfig::default(), 0.0)
}

pub fn gcc_phat_with(
    x: &[f64],
    y: &[f64],
    geom: &MicPairGeometry,
    cfg: &GccConfig,
    frame_time: f64,
) -> Result<TdoaEstimate, AudioError> {
    geom.check()?;
    if x.len() != y.len() {
        return Err(AudioError::InvalidFrame(format!("channel lengths differ ({} vs {})", x.len(), y.len())));
    }
    if x.len() < MIN_FRAME {
        return Err(AudioError::InvalidFrame(format!("{} samples, need at least {MIN_FRAME}", x.len())));
    }
    if mean_square(x) < cfg.energy_floor || mean_square(y) < cfg.energy_floor {
        return Err(AudioError::DegenerateSignal);
    }

    let n = x.len();
    let m = 2 * n;
    let up = cfg.upsample.max(1);
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(m);
    let spectrum = |s: &[f64]| {
        let mut buf: Vec<Complex<f64>> = s.iter().map(|&v| Complex::new(v, 0.0)).collect();
        buf.resize(m, Complex::new(0.0, 0.0));
        fwd.process(&mut buf);
        buf
    };
    let (sx, sy) = (spectrum(x), spectrum(y));

    // Y·conj(X) peaks at the lag by which y trails x.
    let mut cross = vec![Complex::new(0.0, 0.0); m * up];
    for k in 0..m {
        let c = sy[k] * sx[k].conj();
        let mag = c.norm();
        let w = if mag > 1e-300 { c / mag } else { Complex::new(0.0, 0.0) };
        // Positive frequencies stay at the front, negative ones move to the
        // back; the Nyquist bin is split between both ends.
        if k < m / 2 {
            cross[k] = w;
        } else if k == m / 2 {
            cross[k] = w * 0.5;
            cross[m * up - m / 2] += w * 0.5;
        } else {
            cross[m * up - (m - k)] = w;
        }
    }
    planner.plan_fft_inverse(m * up).process(&mut cross);
    let len = (m * up) as isize;
    let at = |lag: isize| cross[lag.rem_euclid(len) as usize].re / m as f64;

    let max_lag = (geom.max_tau() * geom.sample_rate).ceil() as isize * up as isize;
    let lags: Vec<isize> = (-max_lag..=max_lag).collect();
    let values: Vec<f64> = lags.iter().map(|&l| at(l)).collect();
    let (best_i, &best) = values
        .iter()
        .enumerate()
        .fold((0, &f64::NEG_INFINITY), |acc, (i, v)| if *v > *acc.1 { (i, v) } else { acc });

    let (l, c, r) = (at(lags[best_i] - 1), best, at(lags[best_i] + 1));
    let denom = l - 2.0 * c + r;
    let offset = if denom < 0.0 { (0.5 * (l - r) / denom).clamp(-0.5, 0.5) } else { 0.0 };
    let lag = lags[best_i] as f64 + offset;
    let limit = geom.max_tau() + 1.0 / geom.sample_rate;
    let tau = (lag / (up as f64 * geom.sample_rate)).clamp(-limit, limit);

    // Strongest other local maximum, at least one original sample away.
    let second = (1..values.len().saturating_sub(1))
        .filter(|&i| values[i] >= values[i - 1] && values[i] >= values[i + 1])
        .filter(|&i| (i as isize - best_i as isize).unsigned_abs() >= up)
        .map(|i| values[i])
        .fold(0.0_f64, f64::max);
    let reliable = best <= 0.0 || second / best <= cfg.reliability_ratio;

    Ok(TdoaEstimate { tau, peak_value: best, frame_time, reliable })
}

/// Far-field bearing for a delay, broadside = 0. `|c·tau/d|` up to 1.02 is
/// clamped onto the endfire limit.
pub fn tdoa_to_doa(tau: f64, geom: &MicPairGeometry) -> Result<f64, AudioError> {
    const EPS: f64 = 0.02;
    let s = geom.speed_of_sound * tau / geom.spacing;
    if !s.is_finite() || s.abs() > 1.0 + EPS {
        return Err(AudioError::OutOfRange(s));
    }
    let theta = s.clamp(-1.0, 1.0).asin();
    debug_assert!(theta.abs() <= FRAC_PI_2);
    Ok(theta)
}

/// Frame level in dB relative to full scale (1.0). Silent frames give `-inf`.
pub fn frame_dbfs(frame: &[f64]) -> f64 {
    10.0 * mean_square(frame).log10()
}

/// True iff the frame RMS level is at or above `threshold_db` dBFS.
pub fn voice_active(frame: &[f64], threshold_db: f64) -> bool {
    !frame.is_empty() && frame_dbfs(frame) >= threshold_db
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameConfig {
    pub frame: usize,
    pub hop: usize,
    /// Voice activity threshold in dBFS.
    pub vad_threshold_db: f64,
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self { frame: 1024, hop: 512, vad_threshold_db: -40.0 }
    }
}

/// One analysed frame of a stereo stream.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DoaFrame {
    pub time: f64,
    pub tau: f64,
    pub theta: f64,
    pub reliable: bool,
    pub active: bool,
}

/// Slides a window over a stereo stream and localises every frame that
/// carries enough energy. Silent or degenerate frames are skipped.
pub fn localise_stream(
    left: &[f64],
    right: &[f64],
    geom: &MicPairGeometry,
    frames: &FrameConfig,
    gcc: &GccConfig,
) -> Result<Vec<DoaFrame>, AudioError> {
    if left.len() != right.len() {
        return Err(AudioError::InvalidFrame("channel lengths differ".into()));
    }
    if frames.frame < MIN_FRAME || frames.hop == 0 {
        return Err(AudioError::InvalidFrame("frame shorter than minimum or zero hop".into()));
    }
    let mut out = Vec::new();
    let mut start = 0;
    while start + frames.frame <= left.len() {
        let (x, y) = (&left[start..start + frames.frame], &right[start..start + frames.frame]);
        let time = start as f64 / geom.sample_rate;
        match gcc_phat_with(x, y, geom, gcc, time) {
            Ok(est) => {
                let theta = tdoa_to_doa(est.tau, geom)?;
                let active = voice_active(x, frames.vad_threshold_db) || voice_active(y, frames.vad_threshold_db);
                out.push(DoaFrame { time, tau: est.tau, theta, reliable: est.reliable, active });
            }
            Err(AudioError::DegenerateSignal) => {}
            Err(e) => return Err(e),
        }
        start += frames.hop;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    fn delayed(src: &[f64], n: usize, delay: usize) -> (Vec<f64>, Vec<f64>) {
        let off = 16;
        (src[off..off + n].to_vec(), src[off - delay..off - delay + n].to_vec())
    }

    #[test]
    fn identical_frames_give_zero_delay() {
        let x = noise(1024, 1);
        let est = gcc_phat(&x, &x, &MicPairGeometry::default()).unwrap();
        assert!(est.tau.abs() < 1e-9);
        assert!(est.reliable);
    }

    #[test]
    fn two_sample_delay() {
        let (x, y) = delayed(&noise(2048, 2), 1024, 2);
        let est = gcc_phat(&x, &y, &MicPairGeometry::default()).unwrap();
        assert!((est.tau - 125e-6).abs() <= 0.5 / 16_000.0, "tau {}", est.tau);
    }

    #[test]
    fn scaling_a_channel_does_not_move_the_peak() {
        let (x, y) = delayed(&noise(2048, 3), 1024, 2);
        let y5: Vec<f64> = y.iter().map(|v| 5.0 * v).collect();
        let g = MicPairGeometry::default();
        let a = gcc_phat(&x, &y, &g).unwrap();
        let b = gcc_phat(&x, &y5, &g).unwrap();
        assert!((a.tau - b.tau).abs() < 1e-12);
    }

    #[test]
    fn swapping_channels_negates_delay() {
        let (x, y) = delayed(&noise(2048, 4), 1024, 3);
        let g = MicPairGeometry::default();
        let a = gcc_phat(&x, &y, &g).unwrap();
        let b = gcc_phat(&y, &x, &g).unwrap();
        assert!((a.tau + b.tau).abs() < 1.0 / g.sample_rate);
    }

    #[test]
    fn silent_and_malformed_frames() {
        let g = MicPairGeometry::default();
        let z = vec![0.0; 512];
        assert_eq!(gcc_phat(&z, &noise(512, 5), &g), Err(AudioError::DegenerateSignal));
        assert!(matches!(gcc_phat(&noise(100, 6), &noise(100, 7), &g), Err(AudioError::InvalidFrame(_))));
        assert!(matches!(gcc_phat(&noise(512, 6), &noise(600, 7), &g), Err(AudioError::InvalidFrame(_))));
    }

    #[test]
    fn doa_closed_forms() {
        let g = MicPairGeometry::default();
        assert_eq!(tdoa_to_doa(0.0, &g).unwrap(), 0.0);
        assert!((tdoa_to_doa(125e-6, &g).unwrap() - 0.42875f64.asin()).abs() < 1e-12);
        assert!((tdoa_to_doa(125e-6, &g).unwrap() - 0.4431).abs() < 1e-4);
        assert!((tdoa_to_doa(g.max_tau(), &g).unwrap() - FRAC_PI_2).abs() < 1e-6);
        assert!((tdoa_to_doa(1.01 * g.max_tau(), &g).unwrap() - FRAC_PI_2).abs() < 1e-12);
        assert!(matches!(tdoa_to_doa(1.1 * g.max_tau(), &g), Err(AudioError::OutOfRange(_))));
    }

    #[test]
    fn activity_gate() {
        assert!(!voice_active(&vec![0.0; 1024], -40.0));
        let sine: Vec<f64> = (0..1600).map(|i| (2.0 * std::f64::consts::PI * 440.0 * i as f64 / 16_000.0).sin()).collect();
        assert!(voice_active(&sine, -40.0));
        // A whole number of periods has RMS exactly amplitude / sqrt(2).
        let level = frame_dbfs(&sine);
        assert!(voice_active(&sine, level));
        assert!(!voice_active(&sine, level + 1e-9));
    }
}
