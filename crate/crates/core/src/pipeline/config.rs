use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{input_err, PipelineError, Result};
use crate::beat::BeatConfig;
use crate::dsp::SignalConfig;
use crate::metrics::DEFAULT_THRESHOLDS;
use crate::mixup::DEFAULT_CLIP_SAMPLES;

/// Settings shared by every stage, read from a TOML file with `[signal]`
/// and `[beat]` tables. Missing keys take their defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub signal: SignalConfig,
    pub beat: BeatConfig,
    /// Tempo bucket width in BPM.
    pub bucket_width: f64,
    pub clip_samples: usize,
    pub mixup_p: f64,
    pub seed: u64,
    pub codec_channels: usize,
    pub patch_size: usize,
    pub griffin_lim_iterations: usize,
    pub segment_seconds: f64,
    /// Worker threads for per-track stages; 0 uses every core.
    pub jobs: usize,
    pub thresholds: Vec<f64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            signal: SignalConfig::default(),
            beat: BeatConfig::default(),
            bucket_width: 4.0,
            clip_samples: DEFAULT_CLIP_SAMPLES,
            mixup_p: 0.5,
            seed: 0,
            codec_channels: 16,
            patch_size: 8,
            griffin_lim_iterations: 32,
            segment_seconds: 10.0,
            jobs: 0,
            thresholds: DEFAULT_THRESHOLDS.to_vec(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> std::result::Result<Self, String> {
        let cfg: Self = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(input_err(path))?;
        Self::from_toml_str(&text).map_err(input_err(path))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is plain data")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(PipelineError::Config(m));
        self.signal
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        if !(self.bucket_width.is_finite() && self.bucket_width > 0.0) {
            return bad(format!("bucket_width {} must be positive", self.bucket_width));
        }
        if !(0.0..=1.0).contains(&self.mixup_p) {
            return bad(format!("mixup_p {} outside [0, 1]", self.mixup_p));
        }
        if self.clip_samples < self.signal.min_samples() {
            return bad(format!(
                "clip_samples {} shorter than one analysis window",
                self.clip_samples
            ));
        }
        let d = self.patch_size * self.patch_size;
        if self.patch_size == 0 || self.codec_channels == 0 || self.codec_channels > d {
            return bad(format!(
                "need 1 <= codec_channels <= patch_size², got {} and {}",
                self.codec_channels, self.patch_size
            ));
        }
        if self.griffin_lim_iterations == 0 {
            return bad("griffin_lim_iterations must be at least 1".into());
        }
        if !(self.segment_seconds.is_finite() && self.segment_seconds > 0.0) {
            return bad(format!("segment_seconds {} must be positive", self.segment_seconds));
        }
        if let Some(t) = self.thresholds.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return bad(format!("threshold {t} outside [0, 1]"));
        }
        Ok(())
    }
}
