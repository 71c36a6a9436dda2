use std::path::Path;

use super::{
    cmd_analyze, cmd_embed, cmd_eval, cmd_fit_codec, cmd_group, cmd_ingest, cmd_mix, cmd_segment, CaptionSource,
    EmbedProvider, EvalOptions, MixOptions, PipelineConfig, Result, Workspace,
};
use crate::codec::LatentCodec;
use crate::metrics::MetricsReport;

/// Ingest through eval in one go, with the built-in embedders.
pub fn run_pipeline(
    ws: &Workspace,
    corpus_dir: &Path,
    captions: &CaptionSource,
    config: &PipelineConfig,
    mix: &MixOptions,
) -> Result<MetricsReport> {
    let (_, ingest) = cmd_ingest(ws, corpus_dir, captions, config)?;
    log::info!("ingested {} tracks ({} without captions)", ingest.tracks, ingest.missing_captions);
    let (_, analyze) = cmd_analyze(ws, config, false)?;
    log::info!(
        "analyzed: {} computed, {} cached, {} failed",
        analyze.computed,
        analyze.cache_hits,
        analyze.failed.len()
    );
    let groups = cmd_group(ws, config)?;
    log::info!("{} tempo groups", groups.groups.len());
    let codec = cmd_fit_codec(ws, config)?;
    log::info!("codec {}", codec.codec_id());
    let mixed = cmd_mix(ws, config, mix)?;
    log::info!("{} clips, {} mixed", mixed.specs.len(), mixed.mixed);
    let segments = cmd_segment(ws, config)?;
    log::info!("{} segments", segments.segments.len());
    cmd_embed(ws, config, &EmbedProvider::Builtin)?;
    let mut eval = EvalOptions::from_workspace(ws);
    eval.thresholds = config.thresholds.clone();
    cmd_eval(&eval)
}
