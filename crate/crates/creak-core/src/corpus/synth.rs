//! Deterministic synthetic creaky-speech corpus.
//!
//! Each recording is a chain of "sentences" (formant-filtered glottal
//! pulse trains) separated by silences. A per-recording creak fraction
//! drawn from the class interval decides how many sentence-final regions
//! are rendered with creak acoustics: low, per-pulse-random fundamental
//! (40–70 Hz) with ±20% period jitter and attenuated pulses, versus modal
//! 180–220 Hz with ≤2% jitter. Rater scores are a monotone map from the
//! creak fraction onto the Likert grid, so binarization recovers the
//! intended class by construction.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use super::{write_manifest, CorpusError, CreakLabel, LikertRating, RecordingManifestEntry};
use crate::preprocess::Waveform;
use crate::wav::write_wav;

/// Fixed 4-formant all-pole filter (Hz / Hz bandwidth).
const FORMANTS: [(f64, f64); 4] = [
    (500.0, 80.0),
    (1_500.0, 120.0),
    (2_500.0, 160.0),
    (3_500.0, 200.0),
];

const MODAL_F0_RANGE: (f64, f64) = (180.0, 220.0);
const CREAK_F0_RANGE: (f64, f64) = (40.0, 70.0);
const MODAL_JITTER: f64 = 0.02;
const CREAK_JITTER: f64 = 0.20;
const CREAK_AMPLITUDE: f64 = 0.7;
const SENTENCE_RANGE_S: (f64, f64) = (1.2, 2.4);
const SILENCE_RANGE_S: (f64, f64) = (0.3, 0.8);
/// Portion of each sentence counted as its "final region".
const FINAL_REGION: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticCorpusSpec {
    /// Recordings generated per class.
    pub n_per_class: usize,
    pub sample_rate: u32,
    /// Length of every recording (s).
    pub duration_s: f64,
    /// Creak-fraction interval for the low class.
    pub creak_fraction_low: (f64, f64),
    /// Creak-fraction interval for the high class; must lie strictly
    /// above the low interval.
    pub creak_fraction_high: (f64, f64),
    pub seed: u64,
}

impl Default for SyntheticCorpusSpec {
    fn default() -> Self {
        Self {
            n_per_class: 45,
            sample_rate: 16_000,
            duration_s: 20.0,
            creak_fraction_low: (0.0, 0.2),
            creak_fraction_high: (0.5, 0.9),
            seed: 7,
        }
    }
}

impl SyntheticCorpusSpec {
    pub fn validate(&self) -> Result<(), CorpusError> {
        let err = |m: String| Err(CorpusError::InvalidSpec(m));
        if self.n_per_class == 0 {
            return err("n_per_class must be at least 1".into());
        }
        if self.sample_rate < 8_000 {
            return err(format!(
                "sample_rate {} too low for the 3.5 kHz formant stack",
                self.sample_rate
            ));
        }
        if self.duration_s < 2.5 {
            return err(format!(
                "duration_s {} too short for a sentence plus silence",
                self.duration_s
            ));
        }
        for (name, (lo, hi)) in [
            ("creak_fraction_low", self.creak_fraction_low),
            ("creak_fraction_high", self.creak_fraction_high),
        ] {
            if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
                return err(format!("{name} ({lo}, {hi}) is not an interval within [0,1]"));
            }
        }
        if self.creak_fraction_low.1 >= self.creak_fraction_high.0 {
            return err(format!(
                "class intervals must be disjoint with low.max < high.min, got {:?} and {:?}",
                self.creak_fraction_low, self.creak_fraction_high
            ));
        }
        Ok(())
    }
}

/// One synthesized sentence, in sample indices of the recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceLayout {
    pub start: usize,
    pub end: usize,
    /// Start of the sentence-final region.
    pub final_start: usize,
    /// Whether the final region was rendered with creak acoustics.
    pub creaky: bool,
}

/// Generator-side ground truth for one recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordingLayout {
    pub file_name: String,
    pub intended_label: CreakLabel,
    pub creak_fraction: f64,
    pub sentences: Vec<SentenceLayout>,
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub manifest_path: PathBuf,
    pub entries: Vec<RecordingManifestEntry>,
    pub layouts: Vec<RecordingLayout>,
}

/// Writes `2 · n_per_class` WAV recordings plus a manifest into `out_dir`.
/// Fully deterministic for a given spec.
pub fn generate_synthetic_corpus(
    spec: &SyntheticCorpusSpec,
    out_dir: &Path,
) -> Result<SyntheticCorpus, CorpusError> {
    spec.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|source| CorpusError::Io {
        path: out_dir.display().to_string(),
        source,
    })?;

    let mut entries = Vec::new();
    let mut layouts = Vec::new();
    let total = 2 * spec.n_per_class;
    for i in 0..total {
        let label = if i < spec.n_per_class {
            CreakLabel::Low
        } else {
            CreakLabel::High
        };
        let speaker_id = format!("S{:03}", i + 1);
        let file_name = format!("{speaker_id}_{label}.wav");
        let mut rng = recording_rng(spec.seed, i as u64);

        let interval = match label {
            CreakLabel::Low => spec.creak_fraction_low,
            CreakLabel::High => spec.creak_fraction_high,
        };
        let fraction = draw_uniform(&mut rng, interval.0, interval.1);
        let (samples, sentences) = synth_recording(&mut rng, spec, fraction);
        let (rating_a, rating_b) = synth_ratings(&mut rng, label, interval, fraction);

        let path = out_dir.join(&file_name);
        write_wav(&path, &Waveform::new(samples, spec.sample_rate))?;

        entries.push(RecordingManifestEntry {
            path: PathBuf::from(&file_name),
            speaker_id,
            rating_a,
            rating_b,
        });
        layouts.push(RecordingLayout {
            file_name,
            intended_label: label,
            creak_fraction: fraction,
            sentences,
        });
    }

    let manifest_path = out_dir.join("manifest.csv");
    write_manifest(&manifest_path, &entries)?;
    Ok(SyntheticCorpus {
        manifest_path,
        entries,
        layouts,
    })
}

fn recording_rng(seed: u64, index: u64) -> Xoshiro256PlusPlus {
    // Distinct stream per recording; seed_from_u64 runs SplitMix64 so any
    // distinct input gives an independent state.
    Xoshiro256PlusPlus::seed_from_u64(seed ^ (index + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn draw_uniform(rng: &mut Xoshiro256PlusPlus, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

fn synth_recording(
    rng: &mut Xoshiro256PlusPlus,
    spec: &SyntheticCorpusSpec,
    fraction: f64,
) -> (Vec<f64>, Vec<SentenceLayout>) {
    let rate = f64::from(spec.sample_rate);
    let total = (spec.duration_s * rate).round() as usize;
    let min_sentence = (0.8 * rate) as usize;

    // Lay out sentence spans first so the creaky subset can be chosen
    // from the full count.
    let mut spans: Vec<(usize, usize)> = Vec::new();
    let mut cursor = (draw_uniform(rng, 0.2, 0.4) * rate) as usize;
    while cursor + min_sentence <= total {
        let want = (draw_uniform(rng, SENTENCE_RANGE_S.0, SENTENCE_RANGE_S.1) * rate) as usize;
        let len = want.min(total - cursor);
        if len < min_sentence {
            break;
        }
        spans.push((cursor, cursor + len));
        let gap = (draw_uniform(rng, SILENCE_RANGE_S.0, SILENCE_RANGE_S.1) * rate) as usize;
        cursor += len + gap;
    }

    let n_creaky = ((fraction * spans.len() as f64).round() as usize).min(spans.len());
    let creaky_set: std::collections::HashSet<usize> =
        rand::seq::index::sample(rng, spans.len(), n_creaky)
            .iter()
            .collect();

    let mut samples = vec![0.0f64; total];
    let mut sentences = Vec::with_capacity(spans.len());
    for (s_idx, &(start, end)) in spans.iter().enumerate() {
        let creaky = creaky_set.contains(&s_idx);
        let len = end - start;
        let final_start_rel = (len as f64 * (1.0 - FINAL_REGION)) as usize;
        let sentence = synth_sentence(rng, len, final_start_rel, creaky, rate);
        samples[start..end].copy_from_slice(&sentence);
        sentences.push(SentenceLayout {
            start,
            end,
            final_start: start + final_start_rel,
            creaky,
        });
    }

    // Global scaling preserves the modal/creak amplitude ratio.
    let peak = samples.iter().fold(0.0f64, |m, &s| m.max(s.abs()));
    if peak > 0.0 {
        let k = 0.9 / peak;
        for s in &mut samples {
            *s *= k;
        }
    }
    (samples, sentences)
}

/// A single sentence: Rosenberg-pulse train, first-differenced, through
/// the formant cascade.
fn synth_sentence(
    rng: &mut Xoshiro256PlusPlus,
    len: usize,
    final_start: usize,
    creaky_final: bool,
    rate: f64,
) -> Vec<f64> {
    let modal_f0 = draw_uniform(rng, MODAL_F0_RANGE.0, MODAL_F0_RANGE.1);
    let mut source = vec![0.0f64; len];
    let mut pos = 0usize;
    while pos < len {
        let creak = creaky_final && pos >= final_start;
        let (period, amp) = if creak {
            let f0 = draw_uniform(rng, CREAK_F0_RANGE.0, CREAK_F0_RANGE.1);
            let jitter = draw_uniform(rng, 1.0 - CREAK_JITTER, 1.0 + CREAK_JITTER);
            (rate / f0 * jitter, CREAK_AMPLITUDE)
        } else {
            let jitter = draw_uniform(rng, 1.0 - MODAL_JITTER, 1.0 + MODAL_JITTER);
            (rate / modal_f0 * jitter, 1.0)
        };
        let period_samples = period.round().max(2.0) as usize;
        write_rosenberg_pulse(&mut source[pos..], period_samples.min(len - pos), period, amp);
        pos += period_samples;
    }

    // Differentiate the flow so the spectrum is closer to a glottal flow
    // derivative, then shape with the formant cascade.
    let mut excitation = vec![0.0f64; len];
    excitation[0] = source[0];
    for n in 1..len {
        excitation[n] = source[n] - source[n - 1];
    }
    let mut out = excitation;
    for &(freq, bw) in &FORMANTS {
        resonator_in_place(&mut out, freq, bw, rate);
    }
    out
}

/// Rosenberg glottal flow pulse: rising half-cosine opening phase (40% of
/// the period), quarter-cosine closing phase (16%), closed for the rest.
fn write_rosenberg_pulse(buf: &mut [f64], avail: usize, period: f64, amp: f64) {
    let open = 0.4 * period;
    let close = 0.16 * period;
    let n = avail.min(buf.len());
    for t in 0..n {
        let t = t as f64;
        let v = if t < open {
            0.5 * (1.0 - (std::f64::consts::PI * t / open).cos())
        } else if t < open + close {
            (std::f64::consts::PI * (t - open) / (2.0 * close)).cos()
        } else {
            0.0
        };
        buf[t as usize] += amp * v;
    }
}

/// Two-pole resonator with unit DC gain, applied in place.
fn resonator_in_place(x: &mut [f64], freq: f64, bw: f64, rate: f64) {
    let r = (-std::f64::consts::PI * bw / rate).exp();
    let theta = 2.0 * std::f64::consts::PI * freq / rate;
    let a1 = 2.0 * r * theta.cos();
    let a2 = -r * r;
    let b0 = 1.0 - a1 - a2;
    let mut y1 = 0.0;
    let mut y2 = 0.0;
    for v in x.iter_mut() {
        let y = b0 * *v + a1 * y1 + a2 * y2;
        y2 = y1;
        y1 = y;
        *v = y;
    }
}

/// Monotone map from the creak fraction onto the Likert grid, placed so
/// the rater mean always falls strictly on the intended side of 2.
fn synth_ratings(
    rng: &mut Xoshiro256PlusPlus,
    label: CreakLabel,
    interval: (f64, f64),
    fraction: f64,
) -> (LikertRating, LikertRating) {
    let span = interval.1 - interval.0;
    let u = if span > 0.0 {
        ((fraction - interval.0) / span).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let step = (3.0 * u).round() as u8; // 0..=3
    let halves: u8 = match label {
        CreakLabel::Low => step,      // 0.0, 0.5, 1.0, 1.5
        CreakLabel::High => 5 + step, // 2.5, 3.0, 3.5, 4.0
    };
    let grid = |h: u8| LikertRating::try_from_f64(f64::from(h) * 0.5).expect("grid value");
    // Give the two raters slightly different scores where the grid
    // allows; the mean stays exactly on the mapped value.
    if (1..=7).contains(&halves) {
        match rng.random_range(0..3u8) {
            1 => (grid(halves - 1), grid(halves + 1)),
            2 => (grid(halves + 1), grid(halves - 1)),
            _ => (grid(halves), grid(halves)),
        }
    } else {
        (grid(halves), grid(halves))
    }
}
