//! Feature extraction: frame-wise spectral features collapsed into one
//! fixed-dimension vector per recording by eight statistical functionals.
//!
//! Three frame-level representations are supported, all computed from
//! 100 ms frames at a 5 ms shift on the 8 kHz working signal:
//! log-amplitude spectrogram (513-d), log-mel-spectrogram (128-d), and
//! MFCCs with first and second derivatives (39-d). The functional stage
//! turns a T × D frame matrix into an 8·D vector, giving the contract
//! dimensions 4104 / 1024 / 312.

pub mod cache;
mod functionals;
mod spectral;

pub use cache::{config_hash, FeatureCache};
pub use functionals::apply_functionals;
pub use spectral::{append_deltas, dct_ii_matrix, hamming_window, hz_to_mel, mel_filterbank};

use std::fmt;
use std::sync::Arc;

use ndarray::Array2;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::{real, Real};
use crate::preprocess::Waveform;

/// Additive floor inside the logarithms so digital silence stays finite.
pub const LOG_FLOOR: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("invalid feature config: {0}")]
    BadConfig(String),
    #[error("signal of {len} samples is shorter than one frame ({required} samples)")]
    SignalTooShort { len: usize, required: usize },
    #[error("feature dimension {got} does not match {expected} for {kind}")]
    DimensionMismatch {
        kind: FeatureKind,
        expected: usize,
        got: usize,
    },
    #[error("non-finite value in extracted features")]
    NonFinite,
    #[error("feature cache {path}: {message}")]
    Cache { path: String, message: String },
}

/// Frame-level parameters of the extraction stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Hash)]
#[serde(default)]
pub struct FeatureConfig {
    pub frame_length_ms: u32,
    pub frame_shift_ms: u32,
    pub fft_size: usize,
    pub n_mels: usize,
    /// Cepstral coefficients kept, excluding the 0th.
    pub n_mfcc: usize,
    /// Regression window (frames) for the delta features; odd.
    pub delta_window: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            frame_length_ms: 100,
            frame_shift_ms: 5,
            fft_size: 1024,
            n_mels: 128,
            n_mfcc: 13,
            delta_window: 9,
        }
    }
}

impl FeatureConfig {
    pub fn frame_len_samples(&self, sample_rate: u32) -> usize {
        (u64::from(sample_rate) * u64::from(self.frame_length_ms) / 1000) as usize
    }

    pub fn hop_samples(&self, sample_rate: u32) -> usize {
        (u64::from(sample_rate) * u64::from(self.frame_shift_ms) / 1000) as usize
    }

    pub fn n_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    pub fn validate(&self, sample_rate: u32) -> Result<(), FeatureError> {
        let err = |m: String| Err(FeatureError::BadConfig(m));
        if self.frame_length_ms == 0 || self.frame_shift_ms == 0 {
            return err("frame length and shift must be positive".into());
        }
        let frame = self.frame_len_samples(sample_rate);
        if frame == 0 || self.hop_samples(sample_rate) == 0 {
            return err(format!("frame/hop degenerate at {sample_rate} Hz"));
        }
        if frame > self.fft_size {
            return err(format!(
                "frame of {frame} samples at {sample_rate} Hz exceeds the {}-point FFT",
                self.fft_size
            ));
        }
        if !self.fft_size.is_power_of_two() {
            return err(format!("fft_size {} is not a power of two", self.fft_size));
        }
        if self.n_mels < self.n_mfcc + 1 {
            return err(format!(
                "n_mels {} must be at least n_mfcc + 1 = {}",
                self.n_mels,
                self.n_mfcc + 1
            ));
        }
        if self.delta_window < 3 || self.delta_window.is_multiple_of(2) {
            return err(format!("delta_window {} must be odd and ≥ 3", self.delta_window));
        }
        Ok(())
    }
}

/// Which frame-level representation a matrix or vector carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureKind {
    Spectrogram,
    MelSpectrogram,
    Mfcc,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 3] = [
        FeatureKind::Spectrogram,
        FeatureKind::MelSpectrogram,
        FeatureKind::Mfcc,
    ];

    /// Per-frame dimension under `cfg`.
    pub fn frame_dim(self, cfg: &FeatureConfig) -> usize {
        match self {
            FeatureKind::Spectrogram => cfg.n_bins(),
            FeatureKind::MelSpectrogram => cfg.n_mels,
            FeatureKind::Mfcc => 3 * cfg.n_mfcc,
        }
    }

    /// Per-recording dimension after the eight functionals.
    pub fn vector_dim(self, cfg: &FeatureConfig) -> usize {
        8 * self.frame_dim(cfg)
    }

    pub fn token(self) -> &'static str {
        match self {
            FeatureKind::Spectrogram => "spectrogram",
            FeatureKind::MelSpectrogram => "mel-spectrogram",
            FeatureKind::Mfcc => "mfcc",
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.token())
    }
}

impl std::str::FromStr for FeatureKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "spectrogram" | "spec" => Ok(FeatureKind::Spectrogram),
            "mel-spectrogram" | "mel" | "melspectrogram" => Ok(FeatureKind::MelSpectrogram),
            "mfcc" => Ok(FeatureKind::Mfcc),
            other => Err(format!(
                "unknown feature kind `{other}` (expected spectrogram, mel-spectrogram or mfcc)"
            )),
        }
    }
}

/// T × D matrix of frame-level features.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameMatrix<F> {
    data: Array2<F>,
    kind: FeatureKind,
}

impl<F: Real> FrameMatrix<F> {
    pub fn new(data: Array2<F>, kind: FeatureKind, cfg: &FeatureConfig) -> Result<Self, FeatureError> {
        if data.nrows() == 0 {
            return Err(FeatureError::SignalTooShort {
                len: 0,
                required: 1,
            });
        }
        let expected = kind.frame_dim(cfg);
        if data.ncols() != expected {
            return Err(FeatureError::DimensionMismatch {
                kind,
                expected,
                got: data.ncols(),
            });
        }
        Ok(Self { data, kind })
    }

    pub fn data(&self) -> &Array2<F> {
        &self.data
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn n_frames(&self) -> usize {
        self.data.nrows()
    }
}

/// One recording collapsed to a fixed-dimension vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleFeatureVector<F> {
    pub values: Vec<F>,
    pub kind: FeatureKind,
}

impl<F: Real> SampleFeatureVector<F> {
    pub fn new(values: Vec<F>, kind: FeatureKind, cfg: &FeatureConfig) -> Result<Self, FeatureError> {
        let expected = kind.vector_dim(cfg);
        if values.len() != expected {
            return Err(FeatureError::DimensionMismatch {
                kind,
                expected,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(FeatureError::NonFinite);
        }
        Ok(Self { values, kind })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Splits the signal into `frame_length` windows at `frame_shift` hops.
/// The trailing partial frame is dropped, never padded.
pub fn frame_signal<'a, F: Real>(
    w: &'a Waveform<F>,
    cfg: &FeatureConfig,
) -> Result<Vec<&'a [F]>, FeatureError> {
    let len = cfg.frame_len_samples(w.sample_rate);
    let hop = cfg.hop_samples(w.sample_rate);
    if w.len() < len {
        return Err(FeatureError::SignalTooShort {
            len: w.len(),
            required: len,
        });
    }
    let n_frames = (w.len() - len) / hop + 1;
    Ok((0..n_frames)
        .map(|t| &w.samples[t * hop..t * hop + len])
        .collect())
}

/// Reusable extraction state: window, FFT plan, filterbank and DCT rows
/// are computed once and shared across frames (and threads).
pub struct FeatureExtractor<F: Real> {
    cfg: FeatureConfig,
    sample_rate: u32,
    window: Vec<F>,
    fft: Arc<dyn Fft<F>>,
    mel_bank: Array2<F>,
    /// Rows 1..=n_mfcc of the orthonormal DCT-II matrix.
    dct_rows: Array2<F>,
}

impl<F: Real> FeatureExtractor<F> {
    pub fn new(cfg: FeatureConfig, sample_rate: u32) -> Result<Self, FeatureError> {
        cfg.validate(sample_rate)?;
        let frame_len = cfg.frame_len_samples(sample_rate);
        let window = hamming_window(frame_len);
        let fft = FftPlanner::new().plan_fft_forward(cfg.fft_size);
        let mel_bank = mel_filterbank(cfg.n_mels, cfg.fft_size, sample_rate);
        let full_dct: Array2<F> = dct_ii_matrix(cfg.n_mels);
        let dct_rows = full_dct.slice(ndarray::s![1..=cfg.n_mfcc, ..]).to_owned();
        Ok(Self {
            cfg,
            sample_rate,
            window,
            fft,
            mel_bank,
            dct_rows,
        })
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.cfg
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn mel_bank(&self) -> &Array2<F> {
        &self.mel_bank
    }

    /// Hamming-windowed, zero-padded amplitude spectrum (pre-log),
    /// bins 0..=fft_size/2.
    pub fn amplitude_spectrum(&self, frame: &[F]) -> Vec<F> {
        assert_eq!(frame.len(), self.window.len(), "frame length mismatch");
        let mut buf: Vec<Complex<F>> = frame
            .iter()
            .zip(&self.window)
            .map(|(&s, &w)| Complex::new(s * w, F::zero()))
            .collect();
        buf.resize(self.cfg.fft_size, Complex::new(F::zero(), F::zero()));
        self.fft.process(&mut buf);
        buf[..self.cfg.n_bins()].iter().map(|c| c.norm()).collect()
    }

    /// Natural log of the amplitude spectrum, floored at [`LOG_FLOOR`].
    pub fn log_amplitude_spectrum(&self, frame: &[F]) -> Vec<F> {
        let floor = real::<F>(LOG_FLOOR);
        self.amplitude_spectrum(frame)
            .into_iter()
            .map(|a| (a + floor).ln())
            .collect()
    }

    /// Mel-filterbank energies of the power spectrum, in dB
    /// (`10·log10(energy + floor)`).
    pub fn log_mel_spectrogram(&self, frame: &[F]) -> Vec<F> {
        let amp = self.amplitude_spectrum(frame);
        let floor = real::<F>(LOG_FLOOR);
        let ten = real::<F>(10.0);
        self.mel_bank
            .rows()
            .into_iter()
            .map(|filter| {
                let energy = filter
                    .iter()
                    .zip(&amp)
                    .fold(F::zero(), |acc, (&w, &a)| acc + w * a * a);
                ten * (energy + floor).log10()
            })
            .collect()
    }

    /// Cepstral coefficients 1..=n_mfcc of the log-mel vector.
    pub fn mfcc(&self, frame: &[F]) -> Vec<F> {
        let log_mel = self.log_mel_spectrogram(frame);
        self.mfcc_from_log_mel(&log_mel)
    }

    pub fn mfcc_from_log_mel(&self, log_mel: &[F]) -> Vec<F> {
        self.dct_rows
            .rows()
            .into_iter()
            .map(|row| row.iter().zip(log_mel).fold(F::zero(), |acc, (&c, &v)| acc + c * v))
            .collect()
    }

    /// Frame matrix of the requested kind for a preprocessed waveform.
    pub fn frame_matrix(
        &self,
        w: &Waveform<F>,
        kind: FeatureKind,
    ) -> Result<FrameMatrix<F>, FeatureError> {
        assert_eq!(
            w.sample_rate, self.sample_rate,
            "waveform not at the extractor's working rate"
        );
        let frames = frame_signal(w, &self.cfg)?;
        let rows: Vec<Vec<F>> = match kind {
            FeatureKind::Spectrogram => frames
                .iter()
                .map(|f| self.log_amplitude_spectrum(f))
                .collect(),
            FeatureKind::MelSpectrogram => frames
                .iter()
                .map(|f| self.log_mel_spectrogram(f))
                .collect(),
            FeatureKind::Mfcc => {
                let static_rows: Vec<Vec<F>> = frames.iter().map(|f| self.mfcc(f)).collect();
                let t = static_rows.len();
                let d = self.cfg.n_mfcc;
                let mut m = Array2::zeros((t, d));
                for (i, row) in static_rows.iter().enumerate() {
                    for (j, &v) in row.iter().enumerate() {
                        m[(i, j)] = v;
                    }
                }
                let with_deltas = append_deltas(&m, self.cfg.delta_window);
                return FrameMatrix::new(with_deltas, kind, &self.cfg);
            }
        };
        let t = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        let mut m = Array2::zeros((t, d));
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        FrameMatrix::new(m, kind, &self.cfg)
    }

    /// End-to-end extraction: frames → per-frame features → functionals.
    pub fn extract(
        &self,
        w: &Waveform<F>,
        kind: FeatureKind,
    ) -> Result<SampleFeatureVector<F>, FeatureError> {
        let matrix = self.frame_matrix(w, kind)?;
        apply_functionals(&matrix, &self.cfg)
    }
}

