use std::path::{Path, PathBuf};

use super::{internal_err, Result};
use crate::dsp::encode_wav_pcm16;
use crate::io_util::write_atomic;
use crate::synth::ClickTrack;

/// A deterministic corpus of click grooves spread over a few tempo buckets.
#[derive(Clone, Debug)]
pub struct SyntheticCorpus {
    pub tracks: usize,
    pub seconds: f64,
    pub sample_rate: u32,
    pub seed: u64,
}

impl Default for SyntheticCorpus {
    fn default() -> Self {
        Self {
            tracks: 20,
            seconds: 24.0,
            sample_rate: 16_000,
            seed: 0,
        }
    }
}

const BASE_BPM: [f64; 5] = [85.0, 97.0, 109.0, 121.0, 133.0];
const DRONES: [(f64, &str); 5] = [(110.0, "A"), (146.83, "D"), (196.0, "G"), (130.81, "C"), (164.81, "E")];
const FEELS: [&str; 4] = ["sparse", "driving", "laid-back", "busy"];

impl SyntheticCorpus {
    /// `(file stem, track, caption)` for track `i`.
    pub fn track(&self, i: usize) -> (String, ClickTrack, String) {
        let bpm = BASE_BPM[i % BASE_BPM.len()] + 0.6 * (i / BASE_BPM.len() % 4) as f64;
        let (freq, note) = DRONES[(i / 2) % DRONES.len()];
        let track = ClickTrack {
            bpm,
            seconds: self.seconds,
            sample_rate: self.sample_rate,
            offset_seconds: 0.1 + 0.037 * (i % 7) as f64,
            bass_phase: Some(i % 4),
            noise_db: Some(-30.0),
            drone: Some((freq, 0.05)),
            seed: self.seed.wrapping_mul(1_000_003).wrapping_add(i as u64),
            ..ClickTrack::default()
        };
        let caption = format!(
            "a {} click groove at {bpm:.0} BPM over a soft {note} drone",
            FEELS[i % FEELS.len()]
        );
        (format!("track{i:03}"), track, caption)
    }
}

/// Writes `trackNNN.wav` with a `trackNNN.txt` caption for every track.
pub fn write_synthetic_corpus(dir: &Path, corpus: &SyntheticCorpus) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for i in 0..corpus.tracks {
        let (stem, track, caption) = corpus.track(i);
        let wav = dir.join(format!("{stem}.wav"));
        let bytes = encode_wav_pcm16(&track.render()).map_err(internal_err(&stem))?;
        write_atomic(&wav, &bytes).map_err(internal_err(&wav.display().to_string()))?;
        let txt = dir.join(format!("{stem}.txt"));
        write_atomic(&txt, format!("{caption}\n").as_bytes()).map_err(internal_err(&txt.display().to_string()))?;
        paths.push(wav);
    }
    Ok(paths)
}
