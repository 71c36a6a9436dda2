//! Tempo, beat and downbeat annotation.
//!
//! The built-in tracker is classical: spectral-flux onset envelope,
//! prior-weighted autocorrelation for tempo, dynamic programming for beat
//! placement, and a low-band energy vote for the 4/4 bar phase. Annotations
//! from an external tracker can be ingested through the sidecar JSON format
//! in [`annotation`].

pub mod annotation;
mod downbeat;
mod onset;
mod tempo;
mod tracker;

pub use annotation::{load_beat_annotation, save_beat_annotation, sidecar_path};
pub use downbeat::infer_downbeats;
pub use onset::onset_envelope;
pub use tempo::estimate_tempo;
pub use tracker::track_beats;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsp::{mel_spectrogram, DspError, SignalConfig, Waveform};
use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum BeatError {
    #[error("no onsets detected")]
    NoOnsets,
    #[error("need at least 4 beats to infer downbeats, found {found}")]
    TooFewBeats { found: usize },
    #[error("onset envelope has {frames} frames, tempo estimation needs {needed}")]
    EnvelopeTooShort { frames: usize, needed: usize },
    #[error("tempo {0} BPM outside the supported range")]
    InvalidTempo(f64),
    #[error("beat annotation schema error: {0}")]
    SchemaError(String),
    #[error("beat annotation invariant violated: {0}")]
    InvariantViolation(String),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, BeatError>;

pub const MIN_TEMPO_BPM: f64 = 30.0;
pub const MAX_TEMPO_BPM: f64 = 300.0;
pub const BEATS_PER_BAR: usize = 4;

/// Tuning for the built-in tracker.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BeatConfig {
    /// Weight of the squared log-interval deviation in the DP objective.
    pub tightness: f64,
    pub prior_center_bpm: f64,
    pub prior_sigma_octaves: f64,
    pub search_min_bpm: f64,
    pub search_max_bpm: f64,
    /// Minimum envelope length for tempo estimation.
    pub min_seconds: f64,
    /// Number of lowest mel bins used for the downbeat vote.
    pub low_band_bins: usize,
}

impl Default for BeatConfig {
    fn default() -> Self {
        Self {
            tightness: 100.0,
            prior_center_bpm: 120.0,
            prior_sigma_octaves: 1.0,
            search_min_bpm: 60.0,
            search_max_bpm: 180.0,
            min_seconds: 4.0,
            low_band_bins: 16,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BeatSource {
    Builtin,
    External,
}

/// Per-track tempo and beat map. Times are in seconds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeatGrid {
    pub tempo_bpm: f64,
    pub beat_times: Vec<f64>,
    pub downbeat_times: Vec<f64>,
    pub source: BeatSource,
}

impl BeatGrid {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(BeatError::InvariantViolation(m));
        if !(MIN_TEMPO_BPM..=MAX_TEMPO_BPM).contains(&self.tempo_bpm) {
            return bad(format!(
                "tempo {} BPM outside [{MIN_TEMPO_BPM}, {MAX_TEMPO_BPM}]",
                self.tempo_bpm
            ));
        }
        if let Some(t) = self
            .beat_times
            .iter()
            .chain(&self.downbeat_times)
            .find(|t| !t.is_finite() || **t < 0.0)
        {
            return bad(format!("invalid time {t}"));
        }
        if let Some(w) = self.beat_times.windows(2).find(|w| w[1] <= w[0]) {
            return bad(format!("beat times not strictly ascending at {} → {}", w[0], w[1]));
        }
        for &d in &self.downbeat_times {
            if !self.contains_beat(d) {
                return bad(format!("downbeat {d} is not a beat"));
            }
        }
        if self.beat_times.len() >= 2 {
            let mut ibi: Vec<f64> = self.beat_times.windows(2).map(|w| w[1] - w[0]).collect();
            ibi.sort_by(f64::total_cmp);
            let median = if ibi.len() % 2 == 1 {
                ibi[ibi.len() / 2]
            } else {
                0.5 * (ibi[ibi.len() / 2 - 1] + ibi[ibi.len() / 2])
            };
            let period = 60.0 / self.tempo_bpm;
            if (median - period).abs() > 0.1 * period {
                return bad(format!(
                    "median inter-beat interval {median:.4}s disagrees with tempo period {period:.4}s"
                ));
            }
        }
        Ok(())
    }

    fn contains_beat(&self, t: f64) -> bool {
        let idx = self.beat_times.partition_point(|&b| b < t - 1e-6);
        self.beat_times
            .get(idx)
            .is_some_and(|&b| (b - t).abs() <= 1e-6)
    }
}

/// Time of envelope frame `frame`.
///
/// Flux peaks once an onset reaches the leading half-amplitude point of the
/// analysis window, `window / 4` samples ahead of the frame centre; that
/// offset is added back.
pub fn frame_to_seconds(frame: usize, config: &SignalConfig) -> f64 {
    let latency = config.window as f64 / 4.0;
    (frame as f64 * config.hop as f64 + latency) / f64::from(config.sample_rate)
}

pub fn seconds_to_frame(seconds: f64, config: &SignalConfig) -> usize {
    (seconds * f64::from(config.sample_rate) / config.hop as f64)
        .round()
        .max(0.0) as usize
}

/// Full built-in analysis of one track.
pub fn analyze_waveform<S: Real>(
    wave: &Waveform<S>,
    signal: &SignalConfig,
    beat: &BeatConfig,
) -> Result<BeatGrid> {
    let mel = mel_spectrogram(wave, signal)?;
    let env = onset_envelope(&mel);
    let tempo_bpm = estimate_tempo(&env, signal, beat)?;
    let beat_times = track_beats(&env, tempo_bpm, signal, beat)?;
    let downbeat_times = infer_downbeats(&beat_times, &mel, beat)?;
    let grid = BeatGrid {
        tempo_bpm,
        beat_times,
        downbeat_times,
        source: BeatSource::Builtin,
    };
    grid.validate()?;
    Ok(grid)
}
