//! Experiment configuration: a TOML file that round-trips losslessly,
//! merged with command-line overrides, and echoed next to every result.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use creak_core::corpus::SyntheticCorpusSpec;
use creak_core::features::FeatureKind;
use creak_core::ml::{ClassifierKind, ClassifierSpec, ModelParams};
use creak_core::pipeline::PipelineConfig;

/// One classifier request: a kind plus optional hyperparameter
/// overrides; anything left unset keeps the default value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
#[derive(Default)]
pub struct ClassifierEntry {
    pub kind: Option<ClassifierKind>,
    pub c: Option<f64>,
    pub gamma: Option<f64>,
    pub n_estimators: Option<usize>,
    /// Depth limit; `-1` means unbounded (random forest only).
    pub max_depth: Option<i64>,
    pub learning_rate: Option<f64>,
    pub hidden_units: Option<usize>,
    pub alpha: Option<f64>,
    pub max_epochs: Option<usize>,
    pub batch_size: Option<usize>,
}


impl ClassifierEntry {
    pub fn of_kind(kind: ClassifierKind) -> Self {
        Self {
            kind: Some(kind),
            ..Self::default()
        }
    }

    pub fn to_spec(&self) -> anyhow::Result<ClassifierSpec> {
        let kind = self
            .kind
            .ok_or_else(|| anyhow::anyhow!("classifier entry without a kind"))?;
        let mut spec = ClassifierSpec::defaults(kind);
        match &mut spec.params {
            ModelParams::SvmLinear { c } | ModelParams::LogisticRegression { c } => {
                if let Some(v) = self.c {
                    *c = v;
                }
            }
            ModelParams::SvmRbf { c, gamma } => {
                if let Some(v) = self.c {
                    *c = v;
                }
                if let Some(v) = self.gamma {
                    *gamma = v;
                }
            }
            ModelParams::AdaBoost {
                n_estimators,
                learning_rate,
            } => {
                if let Some(v) = self.n_estimators {
                    *n_estimators = v;
                }
                if let Some(v) = self.learning_rate {
                    *learning_rate = v;
                }
            }
            ModelParams::RandomForest {
                n_estimators,
                max_depth,
            } => {
                if let Some(v) = self.n_estimators {
                    *n_estimators = v;
                }
                if let Some(v) = self.max_depth {
                    *max_depth = if v < 0 { None } else { Some(v as usize) };
                }
            }
            ModelParams::DecisionTree { max_depth } => {
                if let Some(v) = self.max_depth {
                    anyhow::ensure!(v > 0, "decision tree max_depth must be positive");
                    *max_depth = v as usize;
                }
            }
            ModelParams::Mlp {
                hidden_units,
                alpha,
                learning_rate,
                max_epochs,
                batch_size,
            } => {
                if let Some(v) = self.hidden_units {
                    *hidden_units = v;
                }
                if let Some(v) = self.alpha {
                    *alpha = v;
                }
                if let Some(v) = self.learning_rate {
                    *learning_rate = v;
                }
                if let Some(v) = self.max_epochs {
                    *max_epochs = v;
                }
                if let Some(v) = self.batch_size {
                    *batch_size = v;
                }
            }
        }
        Ok(spec)
    }
}

/// Full experiment description; flags override file values and the merged
/// result is dumped alongside the outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Labeled corpus manifest. When absent and `synth` is set, a
    /// synthetic corpus is generated under the output directory.
    pub manifest: Option<PathBuf>,
    pub synth: Option<SyntheticCorpusSpec>,
    pub pipeline: PipelineConfig,
    pub features: Vec<FeatureKind>,
    pub classifiers: Vec<ClassifierEntry>,
    /// Classifier seeds; one full LOSO pass per seed.
    pub seeds: Vec<u64>,
    /// Seed for majority-class downsampling.
    pub balance_seed: u64,
    pub output_dir: PathBuf,
    pub cache_dir: Option<PathBuf>,
    pub jobs: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            manifest: None,
            synth: None,
            pipeline: PipelineConfig::default(),
            features: FeatureKind::ALL.to_vec(),
            classifiers: ClassifierKind::ALL
                .into_iter()
                .map(ClassifierEntry::of_kind)
                .collect(),
            seeds: (0..10).collect(),
            balance_seed: 0,
            output_dir: PathBuf::from("results"),
            cache_dir: None,
            jobs: None,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &std::path::Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
        let cfg: Self = toml::from_str(&text)
            .map_err(|e| anyhow::anyhow!("cannot parse config {}: {e}", path.display()))?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }

    pub fn classifier_specs(&self) -> anyhow::Result<Vec<ClassifierSpec>> {
        self.classifiers.iter().map(ClassifierEntry::to_spec).collect()
    }
}
