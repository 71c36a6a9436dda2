use rayon::prelude::*;

use super::{input_err, portable_rel, with_pool, Manifest, PipelineConfig, PipelineError, Result, Workspace};
use crate::beat::{analyze_waveform, load_beat_annotation, save_beat_annotation, sidecar_path, BeatGrid};
use crate::dsp::load_wav;
use crate::io_util::sha256_hex;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AnalyzeSummary {
    pub computed: usize,
    pub cache_hits: usize,
    /// `(track id, error)` per failed track.
    pub failed: Vec<(String, String)>,
}

enum Outcome {
    Hit(BeatGrid, String),
    Computed(BeatGrid, String),
    Failed(String),
}

/// Beat grids for every manifest entry, cached under
/// `cache/beats/<key>.beats.json` where the key covers the audio hash and
/// the analysis settings (or the sidecar bytes for external annotations).
/// Fails only when every track fails.
pub fn cmd_analyze(
    ws: &Workspace,
    config: &PipelineConfig,
    external_beats: bool,
) -> Result<(Manifest, AnalyzeSummary)> {
    config.validate()?;
    let mut manifest = Manifest::load(ws)?;
    let settings = serde_json::to_string(&(&config.signal, &config.beat)).expect("plain data");
    let cache_dir = ws.beats_cache_dir();

    let outcomes: Vec<Outcome> = with_pool(config.jobs, || {
        manifest
            .entries
            .par_iter()
            .map(|entry| {
                let audio = manifest.audio_path(ws, entry);
                let (key, external) = if external_beats {
                    let side = sidecar_path(&audio);
                    match std::fs::read(&side) {
                        Ok(bytes) => (format!("ext-{}", sha256_hex(&bytes)), Some(side)),
                        Err(e) => return Outcome::Failed(input_err(&side)(e).to_string()),
                    }
                } else {
                    (sha256_hex(format!("{}|{settings}", entry.content_hash).as_bytes()), None)
                };
                let cached = cache_dir.join(format!("{key}.beats.json"));
                let rel = portable_rel(&cached, ws);
                if let Ok(grid) = load_beat_annotation(&cached) {
                    return Outcome::Hit(grid, rel);
                }
                let grid = match &external {
                    Some(side) => load_beat_annotation(side).map_err(|e| input_err(side)(e).to_string()),
                    None => load_wav::<f32>(&audio, config.signal.sample_rate)
                        .map_err(|e| e.to_string())
                        .and_then(|w| {
                            analyze_waveform(&w, &config.signal, &config.beat).map_err(|e| e.to_string())
                        }),
                };
                match grid {
                    Ok(g) => match save_beat_annotation(&g, &cached) {
                        Ok(()) => Outcome::Computed(g, rel),
                        Err(e) => Outcome::Failed(format!("writing {}: {e}", cached.display())),
                    },
                    Err(e) => Outcome::Failed(e),
                }
            })
            .collect()
    })?;

    let width_changed = manifest.config.bucket_width != config.bucket_width;
    let mut summary = AnalyzeSummary::default();
    for (entry, outcome) in manifest.entries.iter_mut().zip(outcomes) {
        let (grid, rel) = match outcome {
            Outcome::Hit(g, rel) => {
                summary.cache_hits += 1;
                (g, rel)
            }
            Outcome::Computed(g, rel) => {
                summary.computed += 1;
                (g, rel)
            }
            Outcome::Failed(msg) => {
                log::warn!("{}: {msg}", entry.id);
                summary.failed.push((entry.id.clone(), msg.clone()));
                entry.tempo_bpm = None;
                entry.beats = None;
                entry.group_id = None;
                entry.analysis_error = Some(msg);
                continue;
            }
        };
        if entry.tempo_bpm != Some(grid.tempo_bpm) || width_changed {
            entry.group_id = None;
        }
        entry.tempo_bpm = Some(grid.tempo_bpm);
        entry.beats = Some(rel);
        entry.analysis_error = None;
    }
    manifest.config = config.clone();
    manifest.save(ws)?;
    if summary.failed.len() == manifest.entries.len() {
        return Err(PipelineError::AllTracksFailed(manifest.entries.len()));
    }
    Ok((manifest, summary))
}
