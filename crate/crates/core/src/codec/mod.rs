//! Mel ↔ latent codecs.
//!
//! A codec maps a `T × F` log-mel matrix onto a `C × T/P × F/P` latent and
//! back. [`PcaCodec`] is the built-in linear implementation.

mod file;
mod pca;

pub use file::{load_codec, save_codec, CODEC_MAGIC, CODEC_VERSION};
pub use pca::{FitStats, PatchCovariance, PcaCodec};

use thiserror::Error;

use crate::dsp::{DspError, MelSpectrogram, SignalConfig};
use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("shape {t}×{f} is not divisible by patch size {p}")]
    NonDivisibleShape { t: usize, f: usize, p: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("latent belongs to codec {got}, expected {expected}")]
    CodecMismatch { expected: String, got: String },
    #[error("codec file hash mismatch: header says {stored}, content hashes to {computed}")]
    HashMismatch { stored: String, computed: String },
    #[error("codec file schema error: {0}")]
    SchemaError(String),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CodecError>;

/// Latent tensor laid out as `[channel][time patch][frequency patch]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LatentTensor<S> {
    values: Vec<S>,
    shape: (usize, usize, usize),
    codec_id: String,
}

impl<S: Real> LatentTensor<S> {
    pub fn from_parts(
        values: Vec<S>,
        shape: (usize, usize, usize),
        codec_id: impl Into<String>,
    ) -> Result<Self> {
        let (c, t, f) = shape;
        if values.len() != c * t * f {
            return Err(CodecError::ShapeMismatch(format!(
                "{} values for shape {c}×{t}×{f}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(CodecError::ShapeMismatch(format!("non-finite latent entry at {i}")));
        }
        Ok(Self {
            values,
            shape,
            codec_id: codec_id.into(),
        })
    }

    pub fn zeros(shape: (usize, usize, usize), codec_id: impl Into<String>) -> Self {
        Self {
            values: vec![S::zero(); shape.0 * shape.1 * shape.2],
            shape,
            codec_id: codec_id.into(),
        }
    }

    /// `(C, T/P, F/P)`.
    pub fn shape(&self) -> (usize, usize, usize) {
        self.shape
    }

    pub fn codec_id(&self) -> &str {
        &self.codec_id
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn into_values(self) -> Vec<S> {
        self.values
    }

    #[inline]
    pub fn get(&self, c: usize, t: usize, f: usize) -> S {
        let (_, nt, nf) = self.shape;
        self.values[(c * nt + t) * nf + f]
    }

    pub fn frobenius_norm(&self) -> S {
        self.values.iter().map(|&v| v * v).sum::<S>().sqrt()
    }
}

/// Mel ↔ latent mapping. Implementations must be pure and thread-safe.
pub trait LatentCodec: Send + Sync {
    fn codec_id(&self) -> &str;
    fn channels(&self) -> usize;
    fn patch_size(&self) -> usize;

    fn encode<S: Real>(&self, mel: &MelSpectrogram<S>) -> Result<LatentTensor<S>>;

    /// Reconstructs a mel under `config`, clamped at its log floor.
    fn decode<S: Real>(
        &self,
        latent: &LatentTensor<S>,
        config: &SignalConfig,
    ) -> Result<MelSpectrogram<S>>;

    fn latent_shape(&self, n_frames: usize, n_mels: usize) -> Result<(usize, usize, usize)> {
        let p = self.patch_size();
        if n_frames % p != 0 || n_mels % p != 0 {
            return Err(CodecError::NonDivisibleShape {
                t: n_frames,
                f: n_mels,
                p,
            });
        }
        Ok((self.channels(), n_frames / p, n_mels / p))
    }
}
