//! Leave-one-speaker-out evaluation: fold construction, per-fold scaler
//! fitting and training, accuracy aggregation across seed repetitions.

mod report;

pub use report::{CellValue, ExperimentReport, ReportFormat};

use std::collections::BTreeMap;

use ndarray::{Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::CreakLabel;
use crate::features::FeatureKind;
use crate::ml::{self, ClassifierKind, ClassifierSpec, Dataset, MlError, ScalerFit, ZScoreScaler};
use crate::num::Real;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("LOSO needs at least 2 distinct speakers, got {0}")]
    TooFewSpeakers(usize),
    #[error("feature table: {0}")]
    Table(String),
    #[error("fold for speaker `{speaker}` failed: {source}")]
    Fold {
        speaker: String,
        #[source]
        source: MlError,
    },
    #[error("report: {0}")]
    Report(String),
}

/// Extracted features for a whole corpus, rows aligned with labels and
/// speakers.
#[derive(Debug, Clone)]
pub struct FeatureTable<F> {
    pub kind: FeatureKind,
    pub x: Array2<F>,
    pub labels: Vec<CreakLabel>,
    pub speakers: Vec<String>,
}

impl<F: Real> FeatureTable<F> {
    pub fn new(
        kind: FeatureKind,
        x: Array2<F>,
        labels: Vec<CreakLabel>,
        speakers: Vec<String>,
    ) -> Result<Self, EvalError> {
        if x.nrows() != labels.len() || x.nrows() != speakers.len() {
            return Err(EvalError::Table(format!(
                "{} rows, {} labels, {} speakers",
                x.nrows(),
                labels.len(),
                speakers.len()
            )));
        }
        Ok(Self {
            kind,
            x,
            labels,
            speakers,
        })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }
}

/// One cross-validation fold: all samples of one speaker held out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub test_speaker: String,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

/// One fold per distinct speaker, ordered by speaker id.
pub fn loso_folds(speakers: &[String]) -> Result<Vec<Fold>, EvalError> {
    let mut by_speaker: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, s) in speakers.iter().enumerate() {
        by_speaker.entry(s).or_default().push(i);
    }
    if by_speaker.len() < 2 {
        return Err(EvalError::TooFewSpeakers(by_speaker.len()));
    }
    Ok(by_speaker
        .iter()
        .map(|(speaker, test_indices)| Fold {
            test_speaker: (*speaker).to_string(),
            train_indices: (0..speakers.len())
                .filter(|i| !test_indices.contains(i))
                .collect(),
            test_indices: test_indices.clone(),
        })
        .collect())
}

/// Fits the per-fold scaler on training rows only, recording the rows it
/// saw for the leakage audit.
pub fn fit_fold_scaler<F: Real>(table: &FeatureTable<F>, fold: &Fold) -> ScalerFit<F> {
    ZScoreScaler::fit_indexed(table.x.view(), &fold.train_indices)
}

/// Outcome for one held-out sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleOutcome {
    pub speaker: String,
    pub true_label: CreakLabel,
    pub predicted: CreakLabel,
}

/// One full LOSO pass with a single classifier seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunResult {
    pub feature: FeatureKind,
    pub classifier: ClassifierKind,
    pub seed: u64,
    /// Held-out predictions in fold order.
    pub outcomes: Vec<SampleOutcome>,
    /// Fraction of correct held-out predictions over the whole run.
    pub accuracy: f64,
    /// Rows that fed each fold's scaler, in fold order (audit trail).
    #[serde(default)]
    pub fold_scaler_rows: Vec<Vec<usize>>,
}

/// Runs LOSO once per seed. Scaler and model are refit from scratch in
/// every fold; folds are independent and may run in parallel without
/// changing any reported number.
pub fn run_experiment<F: Real>(
    table: &FeatureTable<F>,
    spec: &ClassifierSpec,
    seeds: &[u64],
) -> Result<Vec<RunResult>, EvalError> {
    let folds = loso_folds(&table.speakers)?;
    let mut results = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let seeded = spec.clone().with_seed(seed);
        let fold_evals: Vec<(Vec<SampleOutcome>, Vec<usize>)> = folds
            .par_iter()
            .map(|fold| evaluate_fold(table, fold, &seeded))
            .collect::<Result<_, EvalError>>()?;

        let mut outcomes = Vec::with_capacity(table.n());
        let mut fold_scaler_rows = Vec::with_capacity(folds.len());
        for (fold_outcomes, scaler_rows) in fold_evals {
            outcomes.extend(fold_outcomes);
            fold_scaler_rows.push(scaler_rows);
        }
        let correct = outcomes
            .iter()
            .filter(|o| o.predicted == o.true_label)
            .count();
        let accuracy = correct as f64 / outcomes.len() as f64;
        results.push(RunResult {
            feature: table.kind,
            classifier: spec.kind(),
            seed,
            outcomes,
            accuracy,
            fold_scaler_rows,
        });
    }
    Ok(results)
}

fn evaluate_fold<F: Real>(
    table: &FeatureTable<F>,
    fold: &Fold,
    spec: &ClassifierSpec,
) -> Result<(Vec<SampleOutcome>, Vec<usize>), EvalError> {
    let fold_err = |source: MlError| EvalError::Fold {
        speaker: fold.test_speaker.clone(),
        source,
    };
    let fit = fit_fold_scaler(table, fold);
    let x_train = fit
        .scaler
        .transform(table.x.select(Axis(0), &fold.train_indices).view());
    let y_train: Vec<CreakLabel> = fold.train_indices.iter().map(|&i| table.labels[i]).collect();
    let data = Dataset::new(x_train, y_train).map_err(fold_err)?;
    let model = ml::train(spec, &data).map_err(fold_err)?;

    let outcomes = fold
        .test_indices
        .iter()
        .map(|&i| {
            let row = fit.scaler.transform_row(table.x.row(i));
            SampleOutcome {
                speaker: table.speakers[i].clone(),
                true_label: table.labels[i],
                predicted: model.predict(row.view()),
            }
        })
        .collect();
    Ok((outcomes, fit.contributing_rows))
}

/// Mean and population standard deviation of per-run accuracies, in
/// percent.
pub fn aggregate(results: &[RunResult]) -> (f64, f64) {
    assert!(!results.is_empty(), "aggregate needs at least one run");
    let accs: Vec<f64> = results.iter().map(|r| r.accuracy * 100.0).collect();
    let mean = accs.iter().sum::<f64>() / accs.len() as f64;
    let var = accs.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / accs.len() as f64;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ml::ModelParams;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_xoshiro::Xoshiro256PlusPlus;

    fn speakers(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn one_fold_per_speaker_sorted() {
        let s = speakers(&["S03", "S01", "S02"]);
        let folds = loso_folds(&s).unwrap();
        assert_eq!(folds.len(), 3);
        assert_eq!(folds[0].test_speaker, "S01");
        assert_eq!(folds[0].test_indices, vec![1]);
        assert_eq!(folds[0].train_indices, vec![0, 2]);
    }

    #[test]
    fn grouped_speakers_share_a_fold() {
        let s = speakers(&["A", "B", "A", "B"]);
        let folds = loso_folds(&s).unwrap();
        assert_eq!(folds.len(), 2);
        assert_eq!(folds[0].test_indices, vec![0, 2]);
        assert_eq!(folds[1].test_indices, vec![1, 3]);
    }

    #[test]
    fn folds_partition_the_samples() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(2);
        for _ in 0..50 {
            let n = rng.random_range(2..30);
            let s: Vec<String> = (0..n)
                .map(|_| format!("S{}", rng.random_range(0..8)))
                .collect();
            let distinct = s.iter().collect::<std::collections::HashSet<_>>().len();
            match loso_folds(&s) {
                Ok(folds) => {
                    assert_eq!(folds.len(), distinct);
                    let mut seen = vec![0usize; n];
                    for fold in &folds {
                        for &i in &fold.test_indices {
                            seen[i] += 1;
                        }
                        let mut all: Vec<usize> = fold
                            .train_indices
                            .iter()
                            .chain(&fold.test_indices)
                            .copied()
                            .collect();
                        all.sort_unstable();
                        assert_eq!(all, (0..n).collect::<Vec<_>>());
                    }
                    assert!(seen.iter().all(|&c| c == 1), "each sample in exactly one test set");
                }
                Err(EvalError::TooFewSpeakers(k)) => assert!(k < 2),
                Err(e) => panic!("unexpected error {e}"),
            }
        }
    }

    #[test]
    fn rejects_single_speaker() {
        assert!(matches!(
            loso_folds(&speakers(&["A", "A"])),
            Err(EvalError::TooFewSpeakers(1))
        ));
    }

    fn oracle_table(n: usize) -> FeatureTable<f64> {
        // Column 1 encodes the label exactly; column 0 is noise.
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(9);
        let labels: Vec<CreakLabel> = (0..n)
            .map(|i| if i % 2 == 0 { CreakLabel::Low } else { CreakLabel::High })
            .collect();
        let x = Array2::from_shape_fn((n, 2), |(i, j)| {
            if j == 0 {
                rng.random_range(-1.0..1.0)
            } else if labels[i] == CreakLabel::High {
                1.0
            } else {
                0.0
            }
        });
        let speakers = (0..n).map(|i| format!("S{i:02}")).collect();
        FeatureTable::new(FeatureKind::Mfcc, x, labels, speakers).unwrap()
    }

    #[test]
    fn planted_oracle_column_gives_perfect_tree_accuracy() {
        let table = oracle_table(16);
        let spec = ClassifierSpec::defaults(ClassifierKind::DecisionTree);
        let results = run_experiment(&table, &spec, &[0]).unwrap();
        assert_eq!(results.len(), 1);
        assert_eq!(results[0].accuracy, 1.0);
        assert_eq!(results[0].outcomes.len(), 16);
    }

    #[test]
    fn identical_seeds_reproduce_fold_flags() {
        let table = oracle_table(12);
        let spec = ClassifierSpec {
            params: ModelParams::RandomForest {
                n_estimators: 15,
                max_depth: None,
            },
            seed: 0,
        };
        let a = run_experiment(&table, &spec, &[3]).unwrap();
        let b = run_experiment(&table, &spec, &[3]).unwrap();
        assert_eq!(a[0].outcomes, b[0].outcomes);
        assert_eq!(a[0].accuracy, b[0].accuracy);
    }

    #[test]
    fn scaler_rows_never_include_test_rows() {
        let table = oracle_table(10);
        let spec = ClassifierSpec::defaults(ClassifierKind::DecisionTree);
        let results = run_experiment(&table, &spec, &[0]).unwrap();
        let folds = loso_folds(&table.speakers).unwrap();
        for (fold, rows) in folds.iter().zip(&results[0].fold_scaler_rows) {
            for i in &fold.test_indices {
                assert!(!rows.contains(i), "test row {i} leaked into the scaler");
            }
            assert_eq!(rows.len(), fold.train_indices.len());
        }
    }

    #[test]
    fn aggregate_mean_and_population_std() {
        let mk = |accuracy: f64| RunResult {
            feature: FeatureKind::Mfcc,
            classifier: ClassifierKind::DecisionTree,
            seed: 0,
            outcomes: vec![],
            accuracy,
            fold_scaler_rows: vec![],
        };
        let (mean, std) = aggregate(&[mk(0.70), mk(0.72)]);
        assert!((mean - 71.0).abs() < 1e-9);
        assert!((std - 1.0).abs() < 1e-9);
        let (m1, s1) = aggregate(&[mk(0.5)]);
        assert_eq!((m1, s1), (50.0, 0.0));
    }
}
