//! Seven binary classifiers behind one train/predict interface, plus the
//! z-score scaler the evaluation harness fits per fold.

mod adaboost;
mod forest;
mod logreg;
mod mlp;
mod svm;
mod tree;

pub use adaboost::{train_adaboost, AdaModel, AdaRound, AdaTrace, ALPHA_ERROR_FLOOR};
pub use forest::ForestModel;
pub use logreg::{LogRegModel, GRAD_TOL};
pub use mlp::MlpModel;
pub use svm::{kkt_max_violation, train_svm_diag, KernelKind, SvmModel, SvmTrainDiag, KKT_TOL};
pub use tree::TreeModel;

use std::fmt;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::CreakLabel;
use crate::num::{real, Real};

/// Variance floor for the scaler; constant columns transform to 0.
pub const SCALER_STD_FLOOR: f64 = 1e-8;

const MODEL_FORMAT_TAG: &str = "creak-model/v1";

#[derive(Debug, Error)]
pub enum MlError {
    #[error("degenerate dataset: {0}")]
    Degenerate(String),
    #[error("feature dimension mismatch: model expects {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("model file {path}: {message}")]
    Persistence { path: String, message: String },
}

/// Training matrix plus labels.
#[derive(Debug, Clone)]
pub struct Dataset<F> {
    pub x: Array2<F>,
    pub y: Vec<CreakLabel>,
}

impl<F: Real> Dataset<F> {
    pub fn new(x: Array2<F>, y: Vec<CreakLabel>) -> Result<Self, MlError> {
        if x.nrows() != y.len() {
            return Err(MlError::Degenerate(format!(
                "{} rows but {} labels",
                x.nrows(),
                y.len()
            )));
        }
        if x.nrows() < 2 {
            return Err(MlError::Degenerate("fewer than 2 training rows".into()));
        }
        if !y.contains(&CreakLabel::Low) || !y.contains(&CreakLabel::High) {
            return Err(MlError::Degenerate("training labels are single-class".into()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(MlError::Degenerate("non-finite feature value".into()));
        }
        Ok(Self { x, y })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }
}

/// ±1 encoding used by the margin-based models: Low ↦ −1, High ↦ +1.
pub(crate) fn label_sign<F: Real>(label: CreakLabel) -> F {
    match label {
        CreakLabel::Low => -F::one(),
        CreakLabel::High => F::one(),
    }
}

/// Decision rule shared by every model: strictly positive scores (or
/// probabilities above 0.5) mean High; ties resolve to Low.
pub(crate) fn sign_label<F: Real>(score: F) -> CreakLabel {
    if score > F::zero() {
        CreakLabel::High
    } else {
        CreakLabel::Low
    }
}

/// Per-column standardization fitted on training rows only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZScoreScaler<F> {
    pub mean: Array1<F>,
    pub std: Array1<F>,
}

/// A fitted scaler together with the rows that contributed statistics,
/// for leakage auditing.
#[derive(Debug, Clone)]
pub struct ScalerFit<F> {
    pub scaler: ZScoreScaler<F>,
    pub contributing_rows: Vec<usize>,
}

impl<F: Real> ZScoreScaler<F> {
    /// Fits mean and population std per column.
    pub fn fit(x: ArrayView2<'_, F>) -> Self {
        let n = real::<F>(x.nrows() as f64);
        let floor = real::<F>(SCALER_STD_FLOOR);
        let mean = x.sum_axis(Axis(0)) / n;
        let mut std = Array1::zeros(x.ncols());
        for (j, col) in x.columns().into_iter().enumerate() {
            let mu = mean[j];
            let var = col.iter().fold(F::zero(), |acc, &v| {
                let d = v - mu;
                acc + d * d
            }) / n;
            std[j] = var.sqrt().max(floor);
        }
        Self { mean, std }
    }

    /// Fits on the selected rows of `x` and records which rows were used.
    pub fn fit_indexed(x: ArrayView2<'_, F>, rows: &[usize]) -> ScalerFit<F> {
        let selected = x.select(Axis(0), rows);
        ScalerFit {
            scaler: Self::fit(selected.view()),
            contributing_rows: rows.to_vec(),
        }
    }

    pub fn transform(&self, x: ArrayView2<'_, F>) -> Array2<F> {
        let mut out = x.to_owned();
        for mut row in out.rows_mut() {
            for j in 0..row.len() {
                row[j] = (row[j] - self.mean[j]) / self.std[j];
            }
        }
        out
    }

    pub fn transform_row(&self, x: ArrayView1<'_, F>) -> Array1<F> {
        Array1::from_iter(
            x.iter()
                .enumerate()
                .map(|(j, &v)| (v - self.mean[j]) / self.std[j]),
        )
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Which of the seven classifiers, without its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassifierKind {
    SvmLinear,
    SvmRbf,
    LogisticRegression,
    AdaBoost,
    RandomForest,
    DecisionTree,
    Mlp,
}

impl ClassifierKind {
    /// Canonical report order (rows of the result table).
    pub const ALL: [ClassifierKind; 7] = [
        ClassifierKind::SvmLinear,
        ClassifierKind::SvmRbf,
        ClassifierKind::LogisticRegression,
        ClassifierKind::AdaBoost,
        ClassifierKind::RandomForest,
        ClassifierKind::DecisionTree,
        ClassifierKind::Mlp,
    ];

    pub fn token(self) -> &'static str {
        match self {
            ClassifierKind::SvmLinear => "svm-linear",
            ClassifierKind::SvmRbf => "svm-rbf",
            ClassifierKind::LogisticRegression => "lr",
            ClassifierKind::AdaBoost => "adaboost",
            ClassifierKind::RandomForest => "rf",
            ClassifierKind::DecisionTree => "dt",
            ClassifierKind::Mlp => "mlp",
        }
    }

    /// Human-readable name used in rendered tables.
    pub fn display_name(self) -> &'static str {
        match self {
            ClassifierKind::SvmLinear => "SVM (linear)",
            ClassifierKind::SvmRbf => "SVM (RBF)",
            ClassifierKind::LogisticRegression => "LR",
            ClassifierKind::AdaBoost => "AdaBoost",
            ClassifierKind::RandomForest => "RF",
            ClassifierKind::DecisionTree => "DT",
            ClassifierKind::Mlp => "MLP",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.token())
    }
}

impl std::str::FromStr for ClassifierKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "svm-linear" | "svm_linear" | "svmlinear" => Ok(ClassifierKind::SvmLinear),
            "svm-rbf" | "svm_rbf" | "svmrbf" => Ok(ClassifierKind::SvmRbf),
            "lr" | "logistic-regression" | "logreg" => Ok(ClassifierKind::LogisticRegression),
            "adaboost" | "ada" => Ok(ClassifierKind::AdaBoost),
            "rf" | "random-forest" => Ok(ClassifierKind::RandomForest),
            "dt" | "decision-tree" => Ok(ClassifierKind::DecisionTree),
            "mlp" => Ok(ClassifierKind::Mlp),
            other => Err(format!("unknown classifier `{other}`")),
        }
    }
}

// Serialized as the CLI token so config files, run logs and flags all
// speak the same names.
impl Serialize for ClassifierKind {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.token())
    }
}

impl<'de> Deserialize<'de> for ClassifierKind {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Hyperparameters for one classifier kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModelParams {
    SvmLinear {
        c: f64,
    },
    SvmRbf {
        c: f64,
        gamma: f64,
    },
    LogisticRegression {
        c: f64,
    },
    AdaBoost {
        n_estimators: usize,
        learning_rate: f64,
    },
    RandomForest {
        n_estimators: usize,
        max_depth: Option<usize>,
    },
    DecisionTree {
        max_depth: usize,
    },
    Mlp {
        hidden_units: usize,
        alpha: f64,
        learning_rate: f64,
        max_epochs: usize,
        batch_size: usize,
    },
}

/// A classifier kind, its hyperparameters and the seed that drives every
/// stochastic component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub params: ModelParams,
    pub seed: u64,
}

impl ClassifierSpec {
    /// Default hyperparameters for each kind.
    pub fn defaults(kind: ClassifierKind) -> Self {
        let params = match kind {
            ClassifierKind::SvmLinear => ModelParams::SvmLinear { c: 1.0 },
            ClassifierKind::SvmRbf => ModelParams::SvmRbf { c: 1.0, gamma: 0.1 },
            ClassifierKind::LogisticRegression => ModelParams::LogisticRegression { c: 1.0 },
            ClassifierKind::AdaBoost => ModelParams::AdaBoost {
                n_estimators: 100,
                learning_rate: 1.0,
            },
            ClassifierKind::RandomForest => ModelParams::RandomForest {
                n_estimators: 100,
                max_depth: None,
            },
            ClassifierKind::DecisionTree => ModelParams::DecisionTree { max_depth: 5 },
            ClassifierKind::Mlp => ModelParams::Mlp {
                hidden_units: 100,
                alpha: 0.01,
                learning_rate: 0.001,
                max_epochs: 200,
                batch_size: 200,
            },
        };
        Self { params, seed: 0 }
    }

    pub fn kind(&self) -> ClassifierKind {
        match self.params {
            ModelParams::SvmLinear { .. } => ClassifierKind::SvmLinear,
            ModelParams::SvmRbf { .. } => ClassifierKind::SvmRbf,
            ModelParams::LogisticRegression { .. } => ClassifierKind::LogisticRegression,
            ModelParams::AdaBoost { .. } => ClassifierKind::AdaBoost,
            ModelParams::RandomForest { .. } => ClassifierKind::RandomForest,
            ModelParams::DecisionTree { .. } => ClassifierKind::DecisionTree,
            ModelParams::Mlp { .. } => ClassifierKind::Mlp,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Learned state of one classifier, ready for prediction on scaled rows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum FittedModel<F> {
    SvmLinear(SvmModel<F>),
    SvmRbf(SvmModel<F>),
    LogisticRegression(LogRegModel<F>),
    AdaBoost(AdaModel<F>),
    RandomForest(ForestModel<F>),
    DecisionTree(TreeModel<F>),
    Mlp(MlpModel<F>),
}

impl<F: Real> FittedModel<F> {
    /// Deterministic label for one already-scaled feature row.
    pub fn predict(&self, x: ArrayView1<'_, F>) -> CreakLabel {
        match self {
            FittedModel::SvmLinear(m) | FittedModel::SvmRbf(m) => m.predict(x),
            FittedModel::LogisticRegression(m) => m.predict(x),
            FittedModel::AdaBoost(m) => m.predict(x),
            FittedModel::RandomForest(m) => m.predict(x),
            FittedModel::DecisionTree(m) => m.predict(x),
            FittedModel::Mlp(m) => m.predict(x),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            FittedModel::SvmLinear(m) | FittedModel::SvmRbf(m) => m.dim(),
            FittedModel::LogisticRegression(m) => m.dim(),
            FittedModel::AdaBoost(m) => m.dim(),
            FittedModel::RandomForest(m) => m.dim(),
            FittedModel::DecisionTree(m) => m.dim(),
            FittedModel::Mlp(m) => m.dim(),
        }
    }
}

/// Trains the classifier described by `spec` on already-scaled data.
///
/// Scaler fitting belongs to the evaluation harness so its statistics can
/// never leak test rows; see [`TrainedModel`] for the bundled form.
pub fn train<F: Real>(spec: &ClassifierSpec, data: &Dataset<F>) -> Result<FittedModel<F>, MlError> {
    match &spec.params {
        ModelParams::SvmLinear { c } => {
            svm::train_svm(data, *c, KernelKind::Linear).map(FittedModel::SvmLinear)
        }
        ModelParams::SvmRbf { c, gamma } => {
            svm::train_svm(data, *c, KernelKind::Rbf { gamma: *gamma }).map(FittedModel::SvmRbf)
        }
        ModelParams::LogisticRegression { c } => {
            logreg::train_logreg(data, *c).map(FittedModel::LogisticRegression)
        }
        ModelParams::AdaBoost {
            n_estimators,
            learning_rate,
        } => adaboost::train_adaboost(data, *n_estimators, *learning_rate)
            .map(|(model, _)| FittedModel::AdaBoost(model)),
        ModelParams::RandomForest {
            n_estimators,
            max_depth,
        } => forest::train_forest(data, *n_estimators, *max_depth, spec.seed)
            .map(FittedModel::RandomForest),
        ModelParams::DecisionTree { max_depth } => {
            tree::train_tree(data, *max_depth).map(FittedModel::DecisionTree)
        }
        ModelParams::Mlp {
            hidden_units,
            alpha,
            learning_rate,
            max_epochs,
            batch_size,
        } => mlp::train_mlp(
            data,
            mlp::MlpHyper {
                hidden_units: *hidden_units,
                alpha: *alpha,
                learning_rate: *learning_rate,
                max_epochs: *max_epochs,
                batch_size: *batch_size,
            },
            spec.seed,
        )
        .map(FittedModel::Mlp),
    }
}

/// A self-contained trained system: spec, scaler and learned parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainedModel<F> {
    format: String,
    pub spec: ClassifierSpec,
    pub scaler: ZScoreScaler<F>,
    pub model: FittedModel<F>,
}

impl<F: Real> TrainedModel<F> {
    pub fn new(spec: ClassifierSpec, scaler: ZScoreScaler<F>, model: FittedModel<F>) -> Self {
        Self {
            format: MODEL_FORMAT_TAG.to_string(),
            spec,
            scaler,
            model,
        }
    }

    /// Fits the scaler on `data`, transforms it, and trains.
    pub fn fit(spec: &ClassifierSpec, data: &Dataset<F>) -> Result<Self, MlError> {
        let scaler = ZScoreScaler::fit(data.x.view());
        let scaled = Dataset::new(scaler.transform(data.x.view()), data.y.clone())?;
        let model = train(spec, &scaled)?;
        Ok(Self::new(spec.clone(), scaler, model))
    }

    /// Applies the stored scaler, then the model.
    pub fn predict(&self, x: &[F]) -> Result<CreakLabel, MlError> {
        if x.len() != self.scaler.dim() {
            return Err(MlError::DimensionMismatch {
                expected: self.scaler.dim(),
                got: x.len(),
            });
        }
        let scaled = self.scaler.transform_row(ArrayView1::from(x));
        Ok(self.model.predict(scaled.view()))
    }

    pub fn save(&self, path: &Path) -> Result<(), MlError> {
        let bytes = serde_json::to_vec(self).map_err(|e| MlError::Persistence {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        std::fs::write(path, bytes).map_err(|e| MlError::Persistence {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, MlError> {
        let bytes = std::fs::read(path).map_err(|e| MlError::Persistence {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let model: Self = serde_json::from_slice(&bytes).map_err(|e| MlError::Persistence {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        if model.format != MODEL_FORMAT_TAG {
            return Err(MlError::Persistence {
                path: path.display().to_string(),
                message: format!(
                    "format tag `{}` does not match `{MODEL_FORMAT_TAG}`",
                    model.format
                ),
            });
        }
        Ok(model)
    }
}
