//! On-disk feature cache: one JSON file per (recording, kind, config).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{FeatureConfig, FeatureError, FeatureKind, SampleFeatureVector};
use crate::num::Real;
use crate::preprocess::PreprocessConfig;

const FORMAT_TAG: &str = "creak-feature/v1";

#[derive(Serialize, Deserialize)]
struct CacheEntry<F> {
    format: String,
    kind: FeatureKind,
    dim: usize,
    values: Vec<F>,
}

/// Hash over everything that influences an extracted vector, used in the
/// cache key so stale entries can never be served.
pub fn config_hash(preprocess: &PreprocessConfig, features: &FeatureConfig) -> String {
    let canonical = serde_json::to_string(&(preprocess, features)).expect("config serializes");
    let digest = Sha256::digest(canonical.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

pub struct FeatureCache {
    dir: PathBuf,
}

impl FeatureCache {
    pub fn new(dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn entry_path(&self, recording: &Path, kind: FeatureKind, hash: &str) -> PathBuf {
        let stem = recording
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "recording".into());
        let path_digest = Sha256::digest(recording.as_os_str().as_encoded_bytes());
        let path_tag: String = path_digest[..4].iter().map(|b| format!("{b:02x}")).collect();
        self.dir
            .join(format!("{stem}_{path_tag}_{}_{hash}.json", kind.token()))
    }

    /// Returns the cached vector, `None` on a miss. A present but
    /// malformed or mismatched entry is an error, never silently ignored.
    pub fn lookup<F: Real>(
        &self,
        recording: &Path,
        kind: FeatureKind,
        hash: &str,
        cfg: &FeatureConfig,
    ) -> Result<Option<SampleFeatureVector<F>>, FeatureError> {
        let path = self.entry_path(recording, kind, hash);
        let bytes = match std::fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => {
                return Err(FeatureError::Cache {
                    path: path.display().to_string(),
                    message: e.to_string(),
                })
            }
        };
        let entry: CacheEntry<F> =
            serde_json::from_slice(&bytes).map_err(|e| FeatureError::Cache {
                path: path.display().to_string(),
                message: format!("malformed cache entry: {e}"),
            })?;
        if entry.format != FORMAT_TAG {
            return Err(FeatureError::Cache {
                path: path.display().to_string(),
                message: format!(
                    "format tag `{}` does not match `{FORMAT_TAG}`",
                    entry.format
                ),
            });
        }
        if entry.kind != kind || entry.dim != entry.values.len() {
            return Err(FeatureError::Cache {
                path: path.display().to_string(),
                message: "cached kind/dimension mismatch".into(),
            });
        }
        SampleFeatureVector::new(entry.values, kind, cfg).map(Some)
    }

    pub fn store<F: Real>(
        &self,
        recording: &Path,
        kind: FeatureKind,
        hash: &str,
        vector: &SampleFeatureVector<F>,
    ) -> Result<(), FeatureError> {
        let path = self.entry_path(recording, kind, hash);
        let entry = CacheEntry {
            format: FORMAT_TAG.to_string(),
            kind,
            dim: vector.dim(),
            values: vector.values.clone(),
        };
        let bytes = serde_json::to_vec(&entry).expect("cache entry serializes");
        std::fs::write(&path, bytes).map_err(|e| FeatureError::Cache {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_and_distinguishes_configs() {
        let dir = tempfile::tempdir().unwrap();
        let cache = FeatureCache::new(dir.path()).unwrap();
        let cfg = FeatureConfig::default();
        let pp = PreprocessConfig::default();
        let hash = config_hash(&pp, &cfg);

        let vector = SampleFeatureVector::new(
            vec![0.5f64; FeatureKind::Mfcc.vector_dim(&cfg)],
            FeatureKind::Mfcc,
            &cfg,
        )
        .unwrap();
        let rec = Path::new("data/S001_low.wav");
        assert!(cache
            .lookup::<f64>(rec, FeatureKind::Mfcc, &hash, &cfg)
            .unwrap()
            .is_none());
        cache.store(rec, FeatureKind::Mfcc, &hash, &vector).unwrap();
        let back = cache
            .lookup::<f64>(rec, FeatureKind::Mfcc, &hash, &cfg)
            .unwrap()
            .expect("cache hit");
        assert_eq!(back, vector);

        // A different preprocess setting must miss.
        let other_pp = PreprocessConfig {
            threshold_db: -50.0,
            ..PreprocessConfig::default()
        };
        let other_hash = config_hash(&other_pp, &cfg);
        assert_ne!(hash, other_hash);
        assert!(cache
            .lookup::<f64>(rec, FeatureKind::Mfcc, &other_hash, &cfg)
            .unwrap()
            .is_none());
    }

    #[test]
    fn malformed_entry_fails_loudly() {
        let dir = tempfile::tempdir().unwrap();
        let cache = FeatureCache::new(dir.path()).unwrap();
        let cfg = FeatureConfig::default();
        let hash = "deadbeefdeadbeef";
        let rec = Path::new("x.wav");
        let path = cache.entry_path(rec, FeatureKind::Mfcc, hash);
        std::fs::write(&path, b"not json").unwrap();
        assert!(matches!(
            cache.lookup::<f64>(rec, FeatureKind::Mfcc, hash, &cfg),
            Err(FeatureError::Cache { .. })
        ));
    }
}
