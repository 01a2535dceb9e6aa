//! Independent oracles for the DSP kernels: a direct O(N²) DFT, a
//! from-the-definitions functional computation, and analytic identities.

use creak_core::features::{
    apply_functionals, frame_signal, FeatureConfig, FeatureExtractor, FeatureKind, FrameMatrix,
};
use creak_core::preprocess::Waveform;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

const RATE: u32 = 8_000;

fn extractor() -> FeatureExtractor<f64> {
    FeatureExtractor::new(FeatureConfig::default(), RATE).unwrap()
}

/// Brute-force DFT magnitude of a Hamming-windowed, zero-padded frame.
/// The window comes from the formula, not from the library.
fn dft_magnitudes(frame: &[f64], fft_size: usize) -> Vec<f64> {
    let l = frame.len();
    let windowed: Vec<f64> = frame
        .iter()
        .enumerate()
        .map(|(n, &s)| {
            let w = 0.54 - 0.46 * (2.0 * std::f64::consts::PI * n as f64 / (l - 1) as f64).cos();
            s * w
        })
        .collect();
    (0..=fft_size / 2)
        .map(|k| {
            let mut re = 0.0;
            let mut im = 0.0;
            for (n, &x) in windowed.iter().enumerate() {
                let angle = -2.0 * std::f64::consts::PI * (k * n) as f64 / fft_size as f64;
                re += x * angle.cos();
                im += x * angle.sin();
            }
            (re * re + im * im).sqrt()
        })
        .collect()
}

#[test]
fn fft_magnitudes_match_direct_dft_on_100_random_frames() {
    let ex = extractor();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(42);
    let frame_len = FeatureConfig::default().frame_len_samples(RATE);
    for _ in 0..100 {
        let frame: Vec<f64> = (0..frame_len).map(|_| rng.random_range(-1.0..1.0)).collect();
        let fast = ex.amplitude_spectrum(&frame);
        let slow = dft_magnitudes(&frame, 1024);
        assert_eq!(fast.len(), 513);
        for (k, (a, b)) in fast.iter().zip(&slow).enumerate() {
            assert!(
                (a - b).abs() <= 1e-6,
                "bin {k}: fft {a} vs dft {b} (diff {})",
                (a - b).abs()
            );
        }
    }
}

#[test]
fn all_zero_frame_hits_the_log_floor() {
    let ex = extractor();
    let frame = vec![0.0f64; 800];
    let spec = ex.log_amplitude_spectrum(&frame);
    for v in &spec {
        assert!((v - 1e-10f64.ln()).abs() < 1e-12);
    }
    let mel = ex.log_mel_spectrogram(&frame);
    assert_eq!(mel.len(), 128);
    for v in &mel {
        assert!((v - (-100.0)).abs() < 1e-12, "expected -100 dB, got {v}");
    }
}

#[test]
fn tenfold_amplitude_adds_twenty_db_per_mel_channel() {
    let ex = extractor();
    // A centered impulse has a flat spectrum, so every mel channel holds
    // solid energy and the additive log floor perturbs the 20 dB law by
    // no more than ~1e-9.
    let mut quiet = vec![0.0f64; 800];
    quiet[400] = 1.0;
    let loud: Vec<f64> = quiet.iter().map(|s| s * 10.0).collect();
    let a = ex.log_mel_spectrogram(&quiet);
    let b = ex.log_mel_spectrogram(&loud);
    for (ch, (x, y)) in a.iter().zip(&b).enumerate() {
        assert!(
            (y - x - 20.0).abs() < 1e-8,
            "channel {ch}: {x} → {y}, delta {}",
            y - x
        );
    }
}

#[test]
fn flat_log_mel_yields_zero_mfccs_and_constant_shift_invariance() {
    let ex = extractor();
    let flat = vec![3.25f64; 128];
    for (i, c) in ex.mfcc_from_log_mel(&flat).iter().enumerate() {
        assert!(c.abs() < 1e-9, "coefficient {i} = {c}");
    }

    let mut rng = Xoshiro256PlusPlus::seed_from_u64(11);
    let base: Vec<f64> = (0..128).map(|_| rng.random_range(-40.0..10.0)).collect();
    let shifted: Vec<f64> = base.iter().map(|v| v + 7.5).collect();
    let a = ex.mfcc_from_log_mel(&base);
    let b = ex.mfcc_from_log_mel(&shifted);
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-9);
    }
}

/// Functionals recomputed straight from the moment definitions.
fn naive_functionals(col: &[f64]) -> [f64; 8] {
    let n = col.len() as f64;
    let mean = col.iter().sum::<f64>() / n;
    let m2 = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m3 = col.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
    let m4 = col.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    let std = m2.sqrt();
    let skew = if m2 > 0.0 { m3 / m2.powf(1.5) } else { 0.0 };
    let kurt = if m2 > 0.0 { m4 / (m2 * m2) - 3.0 } else { 0.0 };
    let mut sorted = col.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = if sorted.len() % 2 == 1 {
        sorted[sorted.len() / 2]
    } else {
        (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2]) / 2.0
    };
    let min = sorted[0];
    let max = sorted[sorted.len() - 1];
    [mean, std, median, skew, kurt, min, max, max - min]
}

#[test]
fn functionals_match_naive_moments_on_100_random_matrices() {
    let cfg = FeatureConfig::default();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(99);
    for _ in 0..100 {
        let t = rng.random_range(1..=50usize);
        let d = rng.random_range(1..=8usize);
        let data = Array2::from_shape_fn((t, 39), |(_i, j)| {
            if j < d {
                rng.random_range(-10.0..10.0)
            } else {
                0.0
            }
        });
        let matrix = FrameMatrix::new(data.clone(), FeatureKind::Mfcc, &cfg).unwrap();
        let vector = apply_functionals(&matrix, &cfg).unwrap();
        for j in 0..d {
            let col: Vec<f64> = (0..t).map(|i| data[(i, j)]).collect();
            let expected = naive_functionals(&col);
            for (block, e) in expected.iter().enumerate() {
                let got = vector.values[block * 39 + j];
                let tol = 1e-9 * e.abs().max(got.abs()).max(1.0);
                assert!(
                    (got - e).abs() <= tol,
                    "functional {block} col {j}: {got} vs {e}"
                );
            }
        }
    }
}

#[test]
fn framing_formula_and_one_hop_shift() {
    let cfg = FeatureConfig::default();
    let l = cfg.frame_len_samples(RATE);
    let h = cfg.hop_samples(RATE);
    assert_eq!((l, h), (800, 40));

    let one_second = Waveform::new(vec![0.25f64; 8_000], RATE);
    let frames = frame_signal(&one_second, &cfg).unwrap();
    assert_eq!(frames.len(), (8_000 - l) / h + 1);
    assert_eq!(frames.len(), 181);

    // Exactly one frame at the boundary, error one sample below it.
    let exact = Waveform::new(vec![0.5f64; l], RATE);
    assert_eq!(frame_signal(&exact, &cfg).unwrap().len(), 1);
    let short = Waveform::new(vec![0.5f64; l - 1], RATE);
    assert!(frame_signal(&short, &cfg).is_err());

    // Prepending one hop of zeros adds exactly one frame.
    let mut padded_samples = vec![0.0f64; h];
    padded_samples.extend_from_slice(&one_second.samples);
    let padded = Waveform::new(padded_samples, RATE);
    assert_eq!(frame_signal(&padded, &cfg).unwrap().len(), frames.len() + 1);
}

#[test]
fn extraction_dimensions_hold_for_every_kind() {
    let ex = extractor();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(5);
    let samples: Vec<f64> = (0..8_000).map(|_| rng.random_range(-0.9..0.9)).collect();
    let w = Waveform::new(samples, RATE);
    for (kind, dim) in [
        (FeatureKind::Spectrogram, 4104),
        (FeatureKind::MelSpectrogram, 1024),
        (FeatureKind::Mfcc, 312),
    ] {
        let v = ex.extract(&w, kind).unwrap();
        assert_eq!(v.dim(), dim, "{kind}");
        assert!(v.values.iter().all(|x| x.is_finite()));
    }
    // Determinism: extraction twice gives identical vectors.
    let a = ex.extract(&w, FeatureKind::MelSpectrogram).unwrap();
    let b = ex.extract(&w, FeatureKind::MelSpectrogram).unwrap();
    assert_eq!(a, b);
}

#[test]
fn per_column_order_statistics_are_consistent() {
    let cfg = FeatureConfig::default();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(13);
    let t = 25;
    let data = Array2::from_shape_fn((t, 39), |_| rng.random_range(-5.0f64..5.0));
    let matrix = FrameMatrix::new(data, FeatureKind::Mfcc, &cfg).unwrap();
    let v = apply_functionals(&matrix, &cfg).unwrap();
    let d = 39;
    for j in 0..d {
        let median = v.values[2 * d + j];
        let min = v.values[5 * d + j];
        let max = v.values[6 * d + j];
        let range = v.values[7 * d + j];
        assert!(min <= median && median <= max);
        assert!(range >= 0.0);
        assert!((range - (max - min)).abs() < 1e-12);
    }
}
