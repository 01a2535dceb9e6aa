//! Classification of continuous speech into low vs. high amount of social
//! creak (habitual creaky voice in healthy speakers).
//!
//! The pipeline has three stages: pre-processing (peak normalization,
//! silence removal, resampling to the 8 kHz working rate), spectral feature
//! extraction (log-spectrogram, log-mel-spectrogram, MFCC+deltas, collapsed
//! per recording by eight statistical functionals), and seven classical
//! binary classifiers evaluated under leave-one-speaker-out
//! cross-validation. A deterministic synthetic creaky-speech generator
//! stands in for real corpora so the whole pipeline is testable end to end.
//!
//! All numeric kernels are generic over the scalar type via [`Real`]
//! (`f32` or `f64`); concrete aliases for the common `f64` instantiation
//! are exported at the crate root.

pub mod corpus;
pub mod eval;
pub mod features;
pub mod ml;
pub mod num;
pub mod pipeline;
pub mod preprocess;
pub mod wav;

pub use corpus::{CreakLabel, LabeledSample, LikertRating, RecordingManifestEntry};
pub use num::Real;

/// `f64` waveform, the instantiation the CLI runs on.
pub type Waveform64 = preprocess::Waveform<f64>;
/// `f32` waveform, for callers that ingest float WAV buffers directly.
pub type Waveform32 = preprocess::Waveform<f32>;
/// `f64` per-recording feature vector.
pub type SampleFeatureVector64 = features::SampleFeatureVector<f64>;
/// `f64` frame-by-frame feature matrix.
pub type FrameMatrix64 = features::FrameMatrix<f64>;
/// `f64` trained classifier with its scaler.
pub type TrainedModel64 = ml::TrainedModel<f64>;
/// `f64` feature table (rows = recordings) ready for evaluation.
pub type FeatureTable64 = eval::FeatureTable<f64>;
