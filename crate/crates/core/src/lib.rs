//! Beat-synchronous mixup for music corpora.
//!
//! Tracks are analysed for beats and downbeats, bucketed by tempo, and mixed
//! either as waveforms or as latents of a PCA patch codec. Embedding I/O and
//! the evaluation metrics live alongside.
//!
//! Numeric code is generic over [`scalar::Real`] (`f32` or `f64`); the
//! aliases below fix the common choices.

pub mod beat;
pub mod codec;
pub mod dsp;
pub mod embed;
pub mod io_util;
pub mod linalg;
pub mod metrics;
pub mod mixup;
pub mod pipeline;
pub mod scalar;
pub mod synth;

pub use scalar::Real;

pub type Waveform32 = dsp::Waveform<f32>;
pub type Waveform64 = dsp::Waveform<f64>;
pub type Mel32 = dsp::MelSpectrogram<f32>;
pub type Mel64 = dsp::MelSpectrogram<f64>;
pub type Latent32 = codec::LatentTensor<f32>;
pub type Latent64 = codec::LatentTensor<f64>;
pub type Embedding32 = embed::Embedding<f32>;
pub type Embedding64 = embed::Embedding<f64>;
pub type EmbeddingSet32 = embed::EmbeddingSet<f32>;
pub type EmbeddingSet64 = embed::EmbeddingSet<f64>;
