//! Labeled-corpus handling: manifest ingestion, Likert-score binarization,
//! class balancing, and the synthetic test corpus.

mod synth;

pub use synth::{
    generate_synthetic_corpus, RecordingLayout, SentenceLayout, SyntheticCorpus,
    SyntheticCorpusSpec,
};

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("manifest {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("manifest {path}: expected header `path,speaker_id,rating_a,rating_b`, got `{got}`")]
    BadHeader { path: String, got: String },
    #[error("manifest {path} row {row}: {message}")]
    BadRow {
        path: String,
        row: usize,
        message: String,
    },
    #[error("manifest {path} row {row}: duplicate speaker `{speaker}`")]
    DuplicateSpeaker {
        path: String,
        row: usize,
        speaker: String,
    },
    #[error("cannot balance: class {0:?} has no samples")]
    EmptyClass(CreakLabel),
    #[error("synthetic corpus: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Wav(#[from] crate::wav::WavError),
}

/// Binary amount-of-creak class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CreakLabel {
    Low,
    High,
}

impl fmt::Display for CreakLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CreakLabel::Low => write!(f, "low"),
            CreakLabel::High => write!(f, "high"),
        }
    }
}

/// Perceptual creak rating on the 9-point grid 0, 0.5, …, 4.
///
/// Stored as half-steps so grid membership and mean comparisons stay exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct LikertRating(u8);

impl LikertRating {
    pub fn try_from_f64(v: f64) -> Result<Self, String> {
        let halves = v * 2.0;
        if !v.is_finite() || halves.fract() != 0.0 || !(0.0..=8.0).contains(&halves) {
            return Err(format!(
                "rating {v} is off the 9-point grid 0, 0.5, …, 4"
            ));
        }
        Ok(Self(halves as u8))
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) * 0.5
    }
}

impl TryFrom<f64> for LikertRating {
    type Error = String;
    fn try_from(v: f64) -> Result<Self, Self::Error> {
        Self::try_from_f64(v)
    }
}

impl From<LikertRating> for f64 {
    fn from(r: LikertRating) -> f64 {
        r.value()
    }
}

impl fmt::Display for LikertRating {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.1}", self.value())
    }
}

/// One labeled recording as listed in a manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordingManifestEntry {
    /// Path to a mono 16-bit PCM WAV; relative paths resolve against the
    /// manifest's directory.
    pub path: PathBuf,
    pub speaker_id: String,
    pub rating_a: LikertRating,
    pub rating_b: LikertRating,
}

impl RecordingManifestEntry {
    pub fn mean_rating(&self) -> f64 {
        (self.rating_a.value() + self.rating_b.value()) / 2.0
    }

    /// Resolves `path` against `base` when it is relative.
    pub fn resolved_path(&self, base: &Path) -> PathBuf {
        if self.path.is_absolute() {
            self.path.clone()
        } else {
            base.join(&self.path)
        }
    }
}

/// A manifest entry whose rater mean fell strictly on one side of 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub entry: RecordingManifestEntry,
    pub mean_rating: f64,
    pub label: CreakLabel,
}

/// Loads and validates a manifest CSV
/// (`path,speaker_id,rating_a,rating_b`, UTF-8, `.` decimal separator).
pub fn load_manifest(path: &Path) -> Result<Vec<RecordingManifestEntry>, CorpusError> {
    let display = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|source| CorpusError::Csv {
            path: display.clone(),
            source,
        })?;

    let headers = reader.headers().map_err(|source| CorpusError::Csv {
        path: display.clone(),
        source,
    })?;
    let expected = ["path", "speaker_id", "rating_a", "rating_b"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(CorpusError::BadHeader {
            path: display,
            got: headers.iter().collect::<Vec<_>>().join(","),
        });
    }

    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2; // 1-based, after the header line
        let record = record.map_err(|source| CorpusError::Csv {
            path: display.clone(),
            source,
        })?;
        if record.len() != 4 {
            return Err(CorpusError::BadRow {
                path: display.clone(),
                row,
                message: format!("expected 4 fields, got {}", record.len()),
            });
        }
        let wav = record[0].to_string();
        let speaker_id = record[1].to_string();
        if wav.is_empty() {
            return Err(CorpusError::BadRow {
                path: display.clone(),
                row,
                message: "empty recording path".into(),
            });
        }
        if speaker_id.is_empty() {
            return Err(CorpusError::BadRow {
                path: display.clone(),
                row,
                message: "empty speaker_id".into(),
            });
        }
        if !seen.insert(speaker_id.clone()) {
            return Err(CorpusError::DuplicateSpeaker {
                path: display.clone(),
                row,
                speaker: speaker_id,
            });
        }
        let parse_rating = |field: &str, name: &str| -> Result<LikertRating, CorpusError> {
            let v: f64 = field.parse().map_err(|_| CorpusError::BadRow {
                path: display.clone(),
                row,
                message: format!("{name} `{field}` is not a number"),
            })?;
            LikertRating::try_from_f64(v).map_err(|message| CorpusError::BadRow {
                path: display.clone(),
                row,
                message,
            })
        };
        let rating_a = parse_rating(&record[2], "rating_a")?;
        let rating_b = parse_rating(&record[3], "rating_b")?;
        entries.push(RecordingManifestEntry {
            path: PathBuf::from(wav),
            speaker_id,
            rating_a,
            rating_b,
        });
    }
    Ok(entries)
}

/// Writes entries in the manifest CSV format.
pub fn write_manifest(
    path: &Path,
    entries: &[RecordingManifestEntry],
) -> Result<(), CorpusError> {
    let display = path.display().to_string();
    let mut out = String::from("path,speaker_id,rating_a,rating_b\n");
    for e in entries {
        out.push_str(&format!(
            "{},{},{},{}\n",
            e.path.display(),
            e.speaker_id,
            e.rating_a,
            e.rating_b
        ));
    }
    std::fs::write(path, out).map_err(|source| CorpusError::Io {
        path: display,
        source,
    })
}

/// Assigns the binary label from the rater mean.
///
/// The class boundaries are strict inequalities, so a mean of exactly 2.0
/// yields no sample.
pub fn binarize(entry: &RecordingManifestEntry) -> Option<LabeledSample> {
    let mean = entry.mean_rating();
    let label = if mean < 2.0 {
        CreakLabel::Low
    } else if mean > 2.0 {
        CreakLabel::High
    } else {
        return None;
    };
    Some(LabeledSample {
        entry: entry.clone(),
        mean_rating: mean,
        label,
    })
}

/// Outcome of binarizing a whole manifest; boundary cases are reported
/// rather than silently dropped.
#[derive(Debug, Clone)]
pub struct BinarizeOutcome {
    pub samples: Vec<LabeledSample>,
    /// Speaker ids whose mean rating was exactly 2.0.
    pub excluded: Vec<String>,
}

pub fn binarize_all(entries: &[RecordingManifestEntry]) -> BinarizeOutcome {
    let mut samples = Vec::new();
    let mut excluded = Vec::new();
    for e in entries {
        match binarize(e) {
            Some(s) => samples.push(s),
            None => excluded.push(e.speaker_id.clone()),
        }
    }
    BinarizeOutcome { samples, excluded }
}

/// Downsamples the majority class to the minority count by seeded uniform
/// choice without replacement. Output preserves input order and is
/// deterministic for a given seed.
pub fn balance_classes(
    samples: &[LabeledSample],
    seed: u64,
) -> Result<Vec<LabeledSample>, CorpusError> {
    let low: Vec<usize> = indices_of(samples, CreakLabel::Low);
    let high: Vec<usize> = indices_of(samples, CreakLabel::High);
    if low.is_empty() {
        return Err(CorpusError::EmptyClass(CreakLabel::Low));
    }
    if high.is_empty() {
        return Err(CorpusError::EmptyClass(CreakLabel::High));
    }
    let keep = low.len().min(high.len());
    let (majority, minority) = if low.len() >= high.len() {
        (low, high)
    } else {
        (high, low)
    };

    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let chosen = rand::seq::index::sample(&mut rng, majority.len(), keep);
    let mut kept: HashSet<usize> = chosen.iter().map(|i| majority[i]).collect();
    kept.extend(minority);

    Ok(samples
        .iter()
        .enumerate()
        .filter(|(i, _)| kept.contains(i))
        .map(|(_, s)| s.clone())
        .collect())
}

fn indices_of(samples: &[LabeledSample], label: CreakLabel) -> Vec<usize> {
    samples
        .iter()
        .enumerate()
        .filter(|(_, s)| s.label == label)
        .map(|(i, _)| i)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(speaker: &str, a: f64, b: f64) -> RecordingManifestEntry {
        RecordingManifestEntry {
            path: PathBuf::from(format!("{speaker}.wav")),
            speaker_id: speaker.to_string(),
            rating_a: LikertRating::try_from_f64(a).unwrap(),
            rating_b: LikertRating::try_from_f64(b).unwrap(),
        }
    }

    #[test]
    fn rating_grid_accepts_half_steps() {
        for halves in 0..=8 {
            let v = f64::from(halves) * 0.5;
            assert_eq!(LikertRating::try_from_f64(v).unwrap().value(), v);
        }
    }

    #[test]
    fn rating_grid_rejects_off_grid_values() {
        for v in [4.5, -0.5, 1.25, f64::NAN, 0.1] {
            assert!(LikertRating::try_from_f64(v).is_err(), "{v} accepted");
        }
    }

    #[test]
    fn binarize_assigns_low_below_two() {
        let s = binarize(&entry("S01", 1.0, 2.0)).unwrap();
        assert_eq!(s.label, CreakLabel::Low);
        assert_eq!(s.mean_rating, 1.5);
    }

    #[test]
    fn binarize_assigns_high_above_two() {
        let s = binarize(&entry("S01", 2.5, 2.5)).unwrap();
        assert_eq!(s.label, CreakLabel::High);
        assert_eq!(s.mean_rating, 2.5);
    }

    #[test]
    fn binarize_excludes_exact_boundary() {
        assert!(binarize(&entry("S01", 2.0, 2.0)).is_none());
        assert!(binarize(&entry("S01", 1.5, 2.5)).is_none());
    }

    #[test]
    fn binarize_is_monotone_over_the_whole_grid() {
        for a in 0..=8 {
            for b in 0..=8 {
                let e = entry("S", f64::from(a) * 0.5, f64::from(b) * 0.5);
                let mean = e.mean_rating();
                match binarize(&e) {
                    Some(s) if mean < 2.0 => assert_eq!(s.label, CreakLabel::Low),
                    Some(s) if mean > 2.0 => assert_eq!(s.label, CreakLabel::High),
                    Some(_) => panic!("boundary mean produced a sample"),
                    None => assert_eq!(mean, 2.0),
                }
            }
        }
    }

    fn labeled(n_low: usize, n_high: usize) -> Vec<LabeledSample> {
        let mut out = Vec::new();
        for i in 0..n_low {
            out.push(binarize(&entry(&format!("L{i:02}"), 1.0, 1.0)).unwrap());
        }
        for i in 0..n_high {
            out.push(binarize(&entry(&format!("H{i:02}"), 3.0, 3.0)).unwrap());
        }
        out
    }

    #[test]
    fn balance_keeps_already_balanced_input() {
        let samples = labeled(45, 45);
        let out = balance_classes(&samples, 0).unwrap();
        assert_eq!(out.len(), 90);
        assert_eq!(out, samples);
    }

    #[test]
    fn balance_downsamples_majority_deterministically() {
        let samples = labeled(50, 45);
        let a = balance_classes(&samples, 0).unwrap();
        let b = balance_classes(&samples, 0).unwrap();
        assert_eq!(a, b);
        let lows = a.iter().filter(|s| s.label == CreakLabel::Low).count();
        let highs = a.iter().filter(|s| s.label == CreakLabel::High).count();
        assert_eq!((lows, highs), (45, 45));
        // A different seed may drop a different subset.
        let c = balance_classes(&samples, 1).unwrap();
        assert_eq!(c.len(), 90);
    }

    #[test]
    fn balance_output_is_subset_preserving_order() {
        let samples = labeled(12, 5);
        let out = balance_classes(&samples, 7).unwrap();
        let mut cursor = 0;
        for s in &out {
            let pos = samples[cursor..]
                .iter()
                .position(|x| x == s)
                .expect("balanced sample must come from the input, in order");
            cursor += pos + 1;
        }
    }

    #[test]
    fn balance_rejects_empty_class() {
        let samples = labeled(10, 0);
        assert!(matches!(
            balance_classes(&samples, 0),
            Err(CorpusError::EmptyClass(CreakLabel::High))
        ));
    }

    #[test]
    fn manifest_round_trip_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.csv");
        let entries = vec![entry("S01", 1.0, 1.5), entry("S02", 3.5, 4.0)];
        write_manifest(&path, &entries).unwrap();
        let back = load_manifest(&path).unwrap();
        assert_eq!(back, entries);
    }

    #[test]
    fn manifest_rejects_off_grid_rating() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.csv");
        std::fs::write(
            &path,
            "path,speaker_id,rating_a,rating_b\nb.wav,S02,4.5,1.0\n",
        )
        .unwrap();
        let err = load_manifest(&path).unwrap_err();
        assert!(matches!(err, CorpusError::BadRow { row: 2, .. }), "{err}");
    }

    #[test]
    fn manifest_rejects_duplicate_speaker() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.csv");
        std::fs::write(
            &path,
            "path,speaker_id,rating_a,rating_b\na.wav,S01,1.0,1.5\nb.wav,S01,2.5,3.0\n",
        )
        .unwrap();
        let err = load_manifest(&path).unwrap_err();
        assert!(matches!(
            err,
            CorpusError::DuplicateSpeaker { row: 3, .. }
        ));
    }

    #[test]
    fn manifest_rejects_missing_file() {
        let err = load_manifest(Path::new("/nonexistent/manifest.csv")).unwrap_err();
        assert!(matches!(err, CorpusError::Csv { .. }));
    }

    #[test]
    fn manifest_rejects_wrong_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.csv");
        std::fs::write(&path, "file,speaker,a,b\nx.wav,S01,1.0,1.0\n").unwrap();
        assert!(matches!(
            load_manifest(&path),
            Err(CorpusError::BadHeader { .. })
        ));
    }
}
