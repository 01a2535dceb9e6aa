//! Reading and writing of the corpus WAV format: RIFF PCM, mono, 16-bit.

use std::path::Path;

use thiserror::Error;

use crate::num::{real, Real};
use crate::preprocess::Waveform;

#[derive(Debug, Error)]
pub enum WavError {
    #[error("failed to open {path}: {source}")]
    Open {
        path: String,
        source: hound::Error,
    },
    #[error("{path}: expected mono 16-bit PCM, got {channels} channel(s), {bits} bit {format:?}")]
    UnsupportedFormat {
        path: String,
        channels: u16,
        bits: u16,
        format: hound::SampleFormat,
    },
    #[error("{path}: contains no samples")]
    Empty { path: String },
    #[error("failed to write {path}: {source}")]
    Write {
        path: String,
        source: hound::Error,
    },
}

/// Reads a mono 16-bit PCM WAV into a waveform scaled to [-1, 1).
pub fn read_wav<F: Real>(path: &Path) -> Result<Waveform<F>, WavError> {
    let display = path.display().to_string();
    let mut reader = hound::WavReader::open(path).map_err(|source| WavError::Open {
        path: display.clone(),
        source,
    })?;
    let spec = reader.spec();
    if spec.channels != 1 || spec.bits_per_sample != 16 || spec.sample_format != hound::SampleFormat::Int
    {
        return Err(WavError::UnsupportedFormat {
            path: display,
            channels: spec.channels,
            bits: spec.bits_per_sample,
            format: spec.sample_format,
        });
    }
    let scale = real::<F>(1.0 / 32768.0);
    let samples = reader
        .samples::<i16>()
        .map(|s| {
            s.map(|v| real::<F>(f64::from(v)) * scale)
                .map_err(|source| WavError::Open {
                    path: display.clone(),
                    source,
                })
        })
        .collect::<Result<Vec<F>, WavError>>()?;
    if samples.is_empty() {
        return Err(WavError::Empty { path: display });
    }
    Ok(Waveform::new(samples, spec.sample_rate))
}

/// Writes a waveform as mono 16-bit PCM. Values are clamped to [-1, 1].
pub fn write_wav<F: Real>(path: &Path, w: &Waveform<F>) -> Result<(), WavError> {
    let display = path.display().to_string();
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: w.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(|source| WavError::Write {
        path: display.clone(),
        source,
    })?;
    for &s in &w.samples {
        let v = s.as_f64().clamp(-1.0, 1.0);
        let q = (v * 32767.0).round() as i16;
        writer.write_sample(q).map_err(|source| WavError::Write {
            path: display.clone(),
            source,
        })?;
    }
    writer.finalize().map_err(|source| WavError::Write {
        path: display,
        source,
    })
}
