//! Pre-processing: peak normalization, silence removal, resampling.
//!
//! The fixed pipeline order is normalize → trim → resample; recordings
//! enter at their native rate and leave at the working rate the feature
//! stage expects.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::{real, Real};

/// RMS analysis window for silence detection (s).
const RMS_WINDOW_S: f64 = 0.025;
/// Hop between RMS windows (s).
const RMS_HOP_S: f64 = 0.010;

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("cannot peak-normalize an all-zero signal")]
    AllZero,
    #[error("entire signal classified as silence")]
    AllSilent,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// A mono signal with amplitudes in [-1, 1] and its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform<F> {
    pub samples: Vec<F>,
    pub sample_rate: u32,
}

impl<F: Real> Waveform<F> {
    pub fn new(samples: Vec<F>, sample_rate: u32) -> Self {
        Self {
            samples,
            sample_rate,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }
}

/// Parameters of the pre-processing stage, exposed as CLI flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    /// Silence threshold relative to the normalized peak (dB, < 0).
    pub threshold_db: f64,
    /// Minimum silent run that gets removed (s).
    pub min_silence_s: f64,
    /// Working sample rate fed to feature extraction (Hz).
    pub target_rate: u32,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            threshold_db: -40.0,
            min_silence_s: 0.2,
            target_rate: 8_000,
        }
    }
}

/// Runs the fixed normalize → trim → resample chain.
pub fn preprocess<F: Real>(
    w: &Waveform<F>,
    cfg: &PreprocessConfig,
) -> Result<Waveform<F>, PreprocessError> {
    let normalized = peak_normalize(w)?;
    let trimmed = trim_silence(&normalized, cfg.threshold_db, cfg.min_silence_s)?;
    resample(&trimmed, cfg.target_rate)
}

/// Divides the signal by its largest absolute amplitude.
///
/// The peak sample maps to exactly ±1, so the function is idempotent.
pub fn peak_normalize<F: Real>(w: &Waveform<F>) -> Result<Waveform<F>, PreprocessError> {
    let peak = w
        .samples
        .iter()
        .fold(F::zero(), |acc, &s| acc.max(s.abs()));
    if peak == F::zero() {
        return Err(PreprocessError::AllZero);
    }
    let samples = w.samples.iter().map(|&s| s / peak).collect();
    Ok(Waveform::new(samples, w.sample_rate))
}

/// Removes maximal runs of silent RMS windows that span at least
/// `min_silence_s`.
///
/// Short-time RMS is computed in 25 ms windows with a 10 ms hop; a window
/// is silent when its RMS falls below `threshold_db` relative to the
/// normalized peak of 1. Retained audio is concatenated in input order.
pub fn trim_silence<F: Real>(
    w: &Waveform<F>,
    threshold_db: f64,
    min_silence_s: f64,
) -> Result<Waveform<F>, PreprocessError> {
    if threshold_db >= 0.0 {
        return Err(PreprocessError::InvalidParameter(format!(
            "threshold_db must be negative, got {threshold_db}"
        )));
    }
    if min_silence_s <= 0.0 {
        return Err(PreprocessError::InvalidParameter(format!(
            "min_silence_s must be positive, got {min_silence_s}"
        )));
    }
    let rate = f64::from(w.sample_rate);
    let win = (RMS_WINDOW_S * rate).round() as usize;
    let hop = (RMS_HOP_S * rate).round() as usize;
    if win == 0 || hop == 0 || w.len() < win {
        // Too short for even one analysis window: nothing to classify.
        return Ok(w.clone());
    }
    let threshold = real::<F>(10f64.powf(threshold_db / 20.0));
    let n_windows = (w.len() - win) / hop + 1;
    let silent: Vec<bool> = (0..n_windows)
        .map(|i| {
            let start = i * hop;
            let frame = &w.samples[start..start + win];
            let energy: F = frame.iter().map(|&s| s * s).sum();
            let rms = (energy / real::<F>(win as f64)).sqrt();
            rms < threshold
        })
        .collect();

    // Collect [start, end) sample ranges to delete.
    let mut deletions: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i < n_windows {
        if silent[i] {
            let run_start = i;
            while i < n_windows && silent[i] {
                i += 1;
            }
            let run_len = i - run_start;
            let span_samples = (run_len - 1) * hop + win;
            if span_samples as f64 / rate >= min_silence_s {
                let start = run_start * hop;
                // A run that reaches the last window also swallows the
                // unclassifiable tail shorter than one hop.
                let end = if run_start + run_len == n_windows {
                    w.len()
                } else {
                    (run_start + run_len - 1) * hop + win
                };
                deletions.push((start, end.min(w.len())));
            }
        } else {
            i += 1;
        }
    }

    if deletions.is_empty() {
        return Ok(w.clone());
    }
    let mut samples = Vec::with_capacity(w.len());
    let mut cursor = 0;
    for (start, end) in deletions {
        // Ranges from nearby runs may overlap because the RMS windows do.
        let start = start.max(cursor);
        samples.extend_from_slice(&w.samples[cursor..start]);
        cursor = cursor.max(end);
    }
    samples.extend_from_slice(&w.samples[cursor..]);
    if samples.is_empty() {
        return Err(PreprocessError::AllSilent);
    }
    Ok(Waveform::new(samples, w.sample_rate))
}

/// Sample-rate conversion via a Kaiser-windowed sinc polyphase filter
/// (stopband attenuation ≥ 60 dB).
///
/// Output length is `round(len · target / source)`. A matching target
/// rate returns the input unchanged.
pub fn resample<F: Real>(
    w: &Waveform<F>,
    target_rate: u32,
) -> Result<Waveform<F>, PreprocessError> {
    if target_rate == 0 {
        return Err(PreprocessError::InvalidParameter(
            "target_rate must be positive".into(),
        ));
    }
    if target_rate == w.sample_rate {
        return Ok(w.clone());
    }
    let src = w.sample_rate as u64;
    let tgt = u64::from(target_rate);
    let g = gcd(src, tgt);
    let up = (tgt / g) as usize; // phases
    let down = (src / g) as usize;

    let ratio = tgt as f64 / src as f64;
    // Kaiser design: 75 dB stopband, transition band 8% of the output
    // bandwidth; widths are in input-sample units.
    let attenuation_db = 75.0;
    let beta = 0.1102 * (attenuation_db - 8.7);
    let cutoff = 0.5 * ratio.min(1.0) * 0.92;
    let transition = 0.5 * ratio.min(1.0) * 0.08;
    let full_len = ((attenuation_db - 8.0) / (2.285 * 2.0 * std::f64::consts::PI * transition)).ceil();
    let half = (full_len / 2.0).ceil() as i64 + 1;

    // Per-phase tap tables, normalized to unit DC gain.
    let i0_beta = bessel_i0(beta);
    let mut phases: Vec<Vec<f64>> = Vec::with_capacity(up);
    for p in 0..up {
        let frac = p as f64 / up as f64;
        let mut taps = Vec::with_capacity((2 * half + 1) as usize);
        for j in -half..=half {
            let u = j as f64 - frac;
            taps.push(sinc_kernel(u, cutoff, half as f64, beta, i0_beta));
        }
        let sum: f64 = taps.iter().sum();
        for t in &mut taps {
            *t /= sum;
        }
        phases.push(taps);
    }

    let n_in = w.len();
    let n_out = ((n_in as u64 * tgt + src / 2) / src) as usize;
    let mut out = Vec::with_capacity(n_out);
    for n in 0..n_out {
        let pos = n * down;
        let idx = (pos / up) as i64;
        let phase = pos % up;
        let taps = &phases[phase];
        let mut acc = 0.0f64;
        for (k, &t) in taps.iter().enumerate() {
            let j = idx + (k as i64 - half);
            if j >= 0 && (j as usize) < n_in {
                acc += w.samples[j as usize].as_f64() * t;
            }
        }
        out.push(real::<F>(acc));
    }
    Ok(Waveform::new(out, target_rate))
}

fn sinc_kernel(u: f64, cutoff: f64, half: f64, beta: f64, i0_beta: f64) -> f64 {
    if u.abs() > half {
        return 0.0;
    }
    let x = 2.0 * cutoff * u;
    let sinc = if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    };
    let t = u / half;
    let window = bessel_i0(beta * (1.0 - t * t).max(0.0).sqrt()) / i0_beta;
    2.0 * cutoff * sinc * window
}

/// Modified Bessel function of the first kind, order zero (power series).
fn bessel_i0(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    let half_x = x / 2.0;
    for k in 1..=30 {
        term *= (half_x / k as f64) * (half_x / k as f64);
        sum += term;
        if term < sum * 1e-16 {
            break;
        }
    }
    sum
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}
