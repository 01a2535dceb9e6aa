//! Orchestration: manifest samples → preprocessed waveforms → cached
//! feature vectors → evaluation-ready tables.

use std::path::Path;

use ndarray::Array2;
use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::LabeledSample;
use crate::eval::{EvalError, FeatureTable};
use crate::features::{
    config_hash, FeatureCache, FeatureConfig, FeatureError, FeatureExtractor, FeatureKind,
    SampleFeatureVector,
};
use crate::num::Real;
use crate::preprocess::{preprocess, PreprocessConfig, PreprocessError};
use crate::wav::{read_wav, WavError};

/// Everything that shapes an extracted feature vector.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub preprocess: PreprocessConfig,
    pub features: FeatureConfig,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("recording {path}: {source}")]
    Recording {
        path: String,
        #[source]
        source: RecordingError,
    },
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("cache: {0}")]
    Cache(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum RecordingError {
    #[error(transparent)]
    Wav(#[from] WavError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
}

/// Extracts one recording end to end (read, preprocess, features),
/// consulting and filling the cache when one is given.
pub fn extract_recording<F: Real>(
    wav_path: &Path,
    kind: FeatureKind,
    extractor: &FeatureExtractor<F>,
    cfg: &PipelineConfig,
    cache: Option<&FeatureCache>,
) -> Result<SampleFeatureVector<F>, PipelineError> {
    let context = |source: RecordingError| PipelineError::Recording {
        path: wav_path.display().to_string(),
        source,
    };
    let hash = config_hash(&cfg.preprocess, &cfg.features);
    if let Some(cache) = cache {
        if let Some(hit) = cache
            .lookup::<F>(wav_path, kind, &hash, &cfg.features)
            .map_err(|e| context(e.into()))?
        {
            return Ok(hit);
        }
    }
    let raw = read_wav::<F>(wav_path).map_err(|e| context(e.into()))?;
    let prepped = preprocess(&raw, &cfg.preprocess).map_err(|e| context(e.into()))?;
    let vector = extractor
        .extract(&prepped, kind)
        .map_err(|e| context(e.into()))?;
    if let Some(cache) = cache {
        cache
            .store(wav_path, kind, &hash, &vector)
            .map_err(|e| context(e.into()))?;
    }
    Ok(vector)
}

/// Builds the feature table for one kind over all samples, in sample
/// order. Recordings are processed in parallel; the row order (and hence
/// every downstream number) does not depend on thread count.
pub fn build_feature_table<F: Real>(
    samples: &[LabeledSample],
    base_dir: &Path,
    kind: FeatureKind,
    cfg: &PipelineConfig,
    cache: Option<&FeatureCache>,
) -> Result<FeatureTable<F>, PipelineError> {
    let extractor = FeatureExtractor::<F>::new(cfg.features.clone(), cfg.preprocess.target_rate)?;
    let vectors: Vec<SampleFeatureVector<F>> = samples
        .par_iter()
        .map(|sample| {
            let path = sample.entry.resolved_path(base_dir);
            extract_recording(&path, kind, &extractor, cfg, cache)
        })
        .collect::<Result<_, _>>()?;

    let dim = kind.vector_dim(&cfg.features);
    let mut x = Array2::zeros((samples.len(), dim));
    for (i, v) in vectors.iter().enumerate() {
        for (j, &value) in v.values.iter().enumerate() {
            x[(i, j)] = value;
        }
    }
    let labels = samples.iter().map(|s| s.label).collect();
    let speakers = samples.iter().map(|s| s.entry.speaker_id.clone()).collect();
    Ok(FeatureTable::new(kind, x, labels, speakers)?)
}
