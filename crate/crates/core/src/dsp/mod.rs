//! Waveform I/O, STFT, log-mel extraction and mel inversion.
//!
//! Log-mel entries are stored as `log10` of the filterbank amplitude and are
//! clamped at [`SignalConfig::log_floor`], which is the configured dB floor
//! divided by 20 (−80 dB → −4.0).

mod griffin_lim;
mod mel;
mod resample;
mod stft;
mod wav;

pub use griffin_lim::{invert_mel, GriffinLim, GriffinLimOutput, PhaseInit};
pub use mel::{mel_spectrogram, MelFilterbank};
pub use resample::resample;
pub use stft::{Spectrogram, StftPlan};
pub use wav::{decode_wav, encode_wav_pcm16, load_wav, write_wav_pcm16};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum DspError {
    #[error("unsupported audio format: {0}")]
    UnsupportedFormat(String),
    #[error("corrupt audio file: {0}")]
    CorruptFile(String),
    #[error("signal too short: {len} samples, need at least {needed}")]
    TooShort { len: usize, needed: usize },
    #[error("sample rate mismatch: expected {expected} Hz, got {got} Hz")]
    RateMismatch { expected: u32, got: u32 },
    #[error("invalid signal config: {0}")]
    InvalidConfig(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DspError>;

/// Analysis parameters. Defaults match the 16 kHz / 160-hop / 1024-window
/// / 128-mel front end the latent geometry is built around.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SignalConfig {
    pub sample_rate: u32,
    pub hop: usize,
    pub window: usize,
    pub fft_size: usize,
    pub n_mels: usize,
    pub fmin: f64,
    pub fmax: f64,
    pub log_floor_db: f64,
}

impl Default for SignalConfig {
    fn default() -> Self {
        Self {
            sample_rate: 16_000,
            hop: 160,
            window: 1024,
            fft_size: 1024,
            n_mels: 128,
            fmin: 0.0,
            fmax: 8_000.0,
            log_floor_db: -80.0,
        }
    }
}

impl SignalConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(DspError::InvalidConfig(m));
        if self.sample_rate == 0 {
            return bad("sample_rate must be positive".into());
        }
        if self.hop == 0 || self.hop > self.window || self.window > self.fft_size {
            return bad(format!(
                "need 0 < hop <= window <= fft_size, got {} / {} / {}",
                self.hop, self.window, self.fft_size
            ));
        }
        if self.n_mels == 0 {
            return bad("n_mels must be at least 1".into());
        }
        let nyquist = f64::from(self.sample_rate) / 2.0;
        if !(self.fmin >= 0.0 && self.fmin < self.fmax && self.fmax <= nyquist) {
            return bad(format!(
                "need 0 <= fmin < fmax <= {nyquist}, got {} / {}",
                self.fmin, self.fmax
            ));
        }
        if !self.log_floor_db.is_finite() {
            return bad("log_floor_db must be finite".into());
        }
        Ok(())
    }

    /// Floor in stored units (`log10` amplitude).
    pub fn log_floor(&self) -> f64 {
        self.log_floor_db / 20.0
    }

    /// Number of frequency bins of the one-sided spectrum.
    pub fn n_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    /// Frames are centred on samples `0, hop, 2·hop, …` strictly inside the
    /// signal, so the count is `ceil(len / hop)`.
    pub fn frame_count(&self, len: usize) -> usize {
        len.div_ceil(self.hop)
    }

    /// Shortest signal the framing accepts.
    pub fn min_samples(&self) -> usize {
        self.window.max(self.fft_size / 2 + 1)
    }

    pub fn seconds_to_samples(&self, seconds: f64) -> usize {
        (seconds * f64::from(self.sample_rate)).round().max(0.0) as usize
    }
}

/// Mono audio.
#[derive(Clone, Debug, PartialEq)]
pub struct Waveform<S> {
    samples: Vec<S>,
    sample_rate: u32,
}

impl<S: Real> Waveform<S> {
    pub fn new(samples: Vec<S>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(DspError::InvalidInput("sample rate must be positive".into()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(DspError::InvalidInput(format!("non-finite sample at index {i}")));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn silence(len: usize, sample_rate: u32) -> Self {
        Self {
            samples: vec![S::zero(); len],
            sample_rate,
        }
    }

    pub fn samples(&self) -> &[S] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<S> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }

    pub fn peak(&self) -> S {
        self.samples
            .iter()
            .fold(S::zero(), |m, &s| if s.abs() > m { s.abs() } else { m })
    }

    /// Copy of `len` samples starting at `start`.
    pub fn slice(&self, start: usize, len: usize) -> Result<Self> {
        let end = start
            .checked_add(len)
            .filter(|&e| e <= self.samples.len())
            .ok_or_else(|| {
                DspError::InvalidInput(format!(
                    "slice {start}..{} out of range for {} samples",
                    start.saturating_add(len),
                    self.samples.len()
                ))
            })?;
        Ok(Self {
            samples: self.samples[start..end].to_vec(),
            sample_rate: self.sample_rate,
        })
    }

    pub fn scaled(&self, gain: S) -> Self {
        Self {
            samples: self.samples.iter().map(|&s| s * gain).collect(),
            sample_rate: self.sample_rate,
        }
    }

    pub fn convert<T: Real>(&self) -> Waveform<T> {
        Waveform {
            samples: self
                .samples
                .iter()
                .map(|&s| T::lit(s.as_f64()))
                .collect(),
            sample_rate: self.sample_rate,
        }
    }
}

/// `T × F` log-mel matrix, row-major by frame.
#[derive(Clone, Debug, PartialEq)]
pub struct MelSpectrogram<S> {
    values: Vec<S>,
    n_frames: usize,
    config: SignalConfig,
}

impl<S: Real> MelSpectrogram<S> {
    /// Validates shape, finiteness and the floor.
    pub fn from_values(values: Vec<S>, n_frames: usize, config: SignalConfig) -> Result<Self> {
        let n_mels = config.n_mels;
        if values.len() != n_frames * n_mels {
            return Err(DspError::InvalidInput(format!(
                "mel buffer has {} values, expected {n_frames}×{n_mels}",
                values.len()
            )));
        }
        let floor = S::lit(config.log_floor());
        // small slack for values produced by arithmetic on clamped inputs
        let slack = S::lit(1e-9) * (S::one() + floor.abs());
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(DspError::InvalidInput(format!("non-finite mel entry at {i}")));
            }
            if *v < floor - slack {
                return Err(DspError::InvalidInput(format!(
                    "mel entry {i} = {v} below log floor {floor}"
                )));
            }
        }
        Ok(Self {
            values,
            n_frames,
            config,
        })
    }

    /// Clamps every value at the floor instead of rejecting it.
    pub fn from_values_clamped(
        mut values: Vec<S>,
        n_frames: usize,
        config: SignalConfig,
    ) -> Result<Self> {
        let floor = S::lit(config.log_floor());
        for v in &mut values {
            if *v < floor {
                *v = floor;
            }
        }
        Self::from_values(values, n_frames, config)
    }

    pub fn filled(value: S, n_frames: usize, config: SignalConfig) -> Result<Self> {
        Self::from_values(vec![value; n_frames * config.n_mels], n_frames, config)
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn n_mels(&self) -> usize {
        self.config.n_mels
    }

    pub fn config(&self) -> &SignalConfig {
        &self.config
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn frame(&self, t: usize) -> &[S] {
        let f = self.config.n_mels;
        &self.values[t * f..(t + 1) * f]
    }

    #[inline]
    pub fn get(&self, t: usize, m: usize) -> S {
        self.values[t * self.config.n_mels + m]
    }

    pub fn floor(&self) -> S {
        S::lit(self.config.log_floor())
    }

    /// Keeps the first `n_frames` frames.
    pub fn truncated(&self, n_frames: usize) -> Self {
        let n = n_frames.min(self.n_frames);
        Self {
            values: self.values[..n * self.config.n_mels].to_vec(),
            n_frames: n,
            config: self.config.clone(),
        }
    }
}
