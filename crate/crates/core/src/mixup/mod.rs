//! Tempo grouping, downbeat alignment and waveform / latent mixing.

mod align;
mod groups;
mod mix;
mod pass;

pub use align::align_downbeats;
pub use groups::{assign_tempo_groups, group_id_for, TempoGroup, TEMPO_HIGH_BPM, TEMPO_LOW_BPM};
pub use mix::{bam_mix, blm_mix, blm_render, sample_mix_ratio, MixRatio};
pub use pass::{apply_mixup_pass, render_clip, MixTrack, PassConfig};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::CodecError;
use crate::dsp::DspError;

/// 10.24 s at 16 kHz.
pub const DEFAULT_CLIP_SAMPLES: usize = 163_840;

#[derive(Debug, Error)]
pub enum MixupError {
    #[error("waveform lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("latent shapes differ: {0:?} vs {1:?}")]
    ShapeMismatch((usize, usize, usize), (usize, usize, usize)),
    #[error("no downbeat of track {track} leaves {clip_samples} samples of audio")]
    NoEligibleDownbeat { track: String, clip_samples: usize },
    #[error("invalid mixup configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown track {0}")]
    UnknownTrack(String),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Dsp(#[from] DspError),
}

pub type Result<T> = std::result::Result<T, MixupError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Bam,
    Blm,
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Strategy::Bam => "bam",
            Strategy::Blm => "blm",
        })
    }
}

impl std::str::FromStr for Strategy {
    type Err = MixupError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bam" => Ok(Strategy::Bam),
            "blm" => Ok(Strategy::Blm),
            other => Err(MixupError::InvalidConfig(format!("unknown strategy {other:?}"))),
        }
    }
}

/// One emitted clip. Unmixed clips leave the `_b` fields and `lambda` empty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixupSpec {
    pub id: String,
    pub track_a: String,
    pub offset_a: u64,
    pub track_b: Option<String>,
    pub offset_b: Option<u64>,
    pub lambda: Option<MixRatio>,
    pub strategy: Strategy,
    pub clip_samples: u64,
    /// Seed of the per-clip generator every choice for this clip came from.
    pub seed: u64,
    /// Source captions, `track_a` first.
    pub captions: Vec<String>,
}

impl MixupSpec {
    pub fn is_mixed(&self) -> bool {
        self.track_b.is_some()
    }
}
