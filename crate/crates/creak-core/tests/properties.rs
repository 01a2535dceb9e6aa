//! Property tests for the invariants that hold over arbitrary inputs.

use creak_core::corpus::{
    balance_classes, binarize, CreakLabel, LikertRating, RecordingManifestEntry,
};
use creak_core::eval::loso_folds;
use creak_core::features::{apply_functionals, FeatureConfig, FeatureKind, FrameMatrix};
use creak_core::preprocess::{peak_normalize, trim_silence, Waveform};
use ndarray::Array2;
use proptest::prelude::*;

fn entry(speaker: String, halves_a: u8, halves_b: u8) -> RecordingManifestEntry {
    RecordingManifestEntry {
        path: format!("{speaker}.wav").into(),
        speaker_id: speaker,
        rating_a: LikertRating::try_from_f64(f64::from(halves_a) * 0.5).unwrap(),
        rating_b: LikertRating::try_from_f64(f64::from(halves_b) * 0.5).unwrap(),
    }
}

proptest! {
    #[test]
    fn peak_normalize_is_idempotent(samples in prop::collection::vec(-1000f64..1000.0, 1..200)) {
        prop_assume!(samples.iter().any(|s| *s != 0.0));
        let w = Waveform::new(samples, 8_000);
        let once = peak_normalize(&w).unwrap();
        let twice = peak_normalize(&once).unwrap();
        prop_assert_eq!(&once.samples, &twice.samples);
        let peak = once.samples.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        prop_assert_eq!(peak, 1.0);
    }

    #[test]
    fn trim_silence_output_never_grows(
        loud_len in 200usize..2000,
        gap_len in 0usize..4000,
    ) {
        let rate = 8_000;
        let mut samples: Vec<f64> = (0..loud_len)
            .map(|i| 0.9 * (i as f64 * 0.3).sin())
            .collect();
        samples.extend(std::iter::repeat_n(0.0, gap_len));
        samples.extend((0..loud_len).map(|i| 0.9 * (i as f64 * 0.3).cos()));
        let w = Waveform::new(samples, rate);
        let out = trim_silence(&w, -40.0, 0.2).unwrap();
        prop_assert!(out.len() <= w.len());
    }

    #[test]
    fn balance_yields_equal_counts_from_any_mix(
        n_low in 1usize..40,
        n_high in 1usize..40,
        seed in any::<u64>(),
    ) {
        let mut samples = Vec::new();
        for i in 0..n_low {
            samples.push(binarize(&entry(format!("L{i}"), 2, 2)).unwrap());
        }
        for i in 0..n_high {
            samples.push(binarize(&entry(format!("H{i}"), 6, 6)).unwrap());
        }
        let out = balance_classes(&samples, seed).unwrap();
        let low = out.iter().filter(|s| s.label == CreakLabel::Low).count();
        let high = out.iter().filter(|s| s.label == CreakLabel::High).count();
        prop_assert_eq!(low, high);
        prop_assert_eq!(low, n_low.min(n_high));
        // Subset: every output sample exists in the input.
        for s in &out {
            prop_assert!(samples.contains(s));
        }
    }

    #[test]
    fn loso_folds_partition_any_grouping(speaker_ids in prop::collection::vec(0u8..10, 2..40)) {
        let speakers: Vec<String> = speaker_ids.iter().map(|i| format!("S{i}")).collect();
        let distinct = speakers.iter().collect::<std::collections::HashSet<_>>().len();
        match loso_folds(&speakers) {
            Ok(folds) => {
                prop_assert_eq!(folds.len(), distinct);
                let n = speakers.len();
                let mut covered = vec![false; n];
                for fold in &folds {
                    for &i in &fold.test_indices {
                        prop_assert!(!covered[i]);
                        covered[i] = true;
                        prop_assert_eq!(&speakers[i], &fold.test_speaker);
                    }
                    for &i in &fold.train_indices {
                        prop_assert!(speakers[i] != fold.test_speaker);
                    }
                    prop_assert_eq!(fold.train_indices.len() + fold.test_indices.len(), n);
                }
                prop_assert!(covered.into_iter().all(|c| c));
            }
            Err(_) => prop_assert_eq!(distinct, 1),
        }
    }

    #[test]
    fn functional_order_statistics(
        rows in prop::collection::vec(prop::collection::vec(-100f64..100.0, 39), 1..30)
    ) {
        let cfg = FeatureConfig::default();
        let t = rows.len();
        let data = Array2::from_shape_fn((t, 39), |(i, j)| rows[i][j]);
        let m = FrameMatrix::new(data, FeatureKind::Mfcc, &cfg).unwrap();
        let v = apply_functionals(&m, &cfg).unwrap();
        prop_assert_eq!(v.dim(), 312);
        let d = 39;
        for j in 0..d {
            let (median, min, max, range) =
                (v.values[2 * d + j], v.values[5 * d + j], v.values[6 * d + j], v.values[7 * d + j]);
            prop_assert!(min <= median && median <= max);
            prop_assert!((range - (max - min)).abs() < 1e-12 && range >= 0.0);
        }
    }
}
