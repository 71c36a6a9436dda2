use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    input_err, internal_err, read_json, with_pool, write_json, Manifest, PipelineConfig, PipelineError,
    Result, Workspace,
};
use crate::beat::load_beat_annotation;
use crate::codec::{load_codec, save_codec, PatchCovariance, PcaCodec};
use crate::dsp::{encode_wav_pcm16, load_wav, mel_spectrogram, Waveform};
use crate::io_util::write_atomic;
use crate::mixup::{
    apply_mixup_pass, assign_tempo_groups, render_clip, MixTrack, MixupSpec, PassConfig, Strategy, TempoGroup,
};

/// Version of `groups.json` and `segments.json`.
pub const INDEX_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupTable {
    pub schema_version: u32,
    pub bucket_width: f64,
    pub groups: Vec<TempoGroup>,
}

/// Buckets every analyzed track and records the group ids in the manifest.
pub fn cmd_group(ws: &Workspace, config: &PipelineConfig) -> Result<GroupTable> {
    config.validate()?;
    let mut manifest = Manifest::load(ws)?;
    let tempi: BTreeMap<String, f64> = manifest
        .entries
        .iter()
        .filter_map(|e| e.tempo_bpm.map(|t| (e.id.clone(), t)))
        .collect();
    if tempi.is_empty() {
        return Err(PipelineError::MissingPrerequisite(
            "no analyzed tracks in the manifest; run `beatmix analyze` first".into(),
        ));
    }
    let groups = assign_tempo_groups(&tempi, config.bucket_width)
        .map_err(|e| PipelineError::Config(e.to_string()))?;
    let lookup: BTreeMap<&str, u32> = groups
        .iter()
        .flat_map(|g| g.members.iter().map(move |m| (m.as_str(), g.group_id)))
        .collect();
    for e in &mut manifest.entries {
        e.group_id = lookup.get(e.id.as_str()).copied();
    }
    manifest.config = config.clone();
    let table = GroupTable {
        schema_version: INDEX_VERSION,
        bucket_width: config.bucket_width,
        groups,
    };
    write_json(&table, &ws.groups())?;
    manifest.save(ws)?;
    Ok(table)
}

/// Fits the patch codec on the mel spectrograms of every manifest track
/// and writes `codec.bin`.
pub fn cmd_fit_codec(ws: &Workspace, config: &PipelineConfig) -> Result<PcaCodec> {
    config.validate()?;
    let manifest = Manifest::load(ws)?;
    let p = config.patch_size;
    let partial: Vec<Option<PatchCovariance>> = with_pool(config.jobs, || {
        manifest
            .entries
            .par_iter()
            .map(|e| {
                let path = manifest.audio_path(ws, e);
                let wave = load_wav::<f32>(&path, config.signal.sample_rate).map_err(input_err(&path))?;
                if wave.len() < config.signal.min_samples() {
                    log::warn!("{}: too short for the codec, skipped", e.id);
                    return Ok(None);
                }
                let mel = mel_spectrogram(&wave, &config.signal).map_err(internal_err(&e.id))?;
                let usable = mel.n_frames() - mel.n_frames() % p;
                if usable == 0 || config.signal.n_mels % p != 0 {
                    log::warn!("{}: no whole {p}×{p} patches, skipped", e.id);
                    return Ok(None);
                }
                let mut acc = PatchCovariance::new(p);
                acc.add(&mel.truncated(usable)).map_err(internal_err(&e.id))?;
                Ok(Some(acc))
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let mut total = PatchCovariance::new(p);
    for acc in partial.iter().flatten() {
        total.merge(acc);
    }
    if total.count() == 0 {
        return Err(PipelineError::MissingPrerequisite(
            "no track yields a whole patch; nothing to fit the codec on".into(),
        ));
    }
    let codec = total
        .finish(config.codec_channels)
        .map_err(|e| PipelineError::Config(e.to_string()))?;
    save_codec(&codec, ws.codec()).map_err(internal_err("writing codec"))?;
    Ok(codec)
}

#[derive(Clone, Debug)]
pub struct MixOptions {
    pub strategy: Strategy,
    pub count: usize,
}

#[derive(Clone, Debug)]
pub struct MixSummary {
    pub specs: Vec<MixupSpec>,
    pub mixed: usize,
}

fn clear_outputs(dir: &std::path::Path) -> Result<()> {
    let Ok(listing) = std::fs::read_dir(dir) else {
        return Ok(());
    };
    for item in listing {
        let path = item.map_err(internal_err("listing mix directory"))?.path();
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        if name.ends_with(".mixspec.json") || name.ends_with(".wav") {
            std::fs::remove_file(&path).map_err(internal_err("clearing mix directory"))?;
        }
    }
    Ok(())
}

/// Plans `count` clips, then renders `mix/<id>.wav` next to
/// `mix/<id>.mixspec.json`. Earlier outputs in `mix/` are replaced.
pub fn cmd_mix(ws: &Workspace, config: &PipelineConfig, opts: &MixOptions) -> Result<MixSummary> {
    config.validate()?;
    let manifest = Manifest::load(ws)?;
    if !ws.groups().is_file() || manifest.entries.iter().all(|e| e.group_id.is_none()) {
        return Err(PipelineError::MissingPrerequisite(
            "tempo groups are missing; run `beatmix group` first".into(),
        ));
    }
    let codec = match opts.strategy {
        Strategy::Blm => {
            let path = ws.codec();
            if !path.is_file() {
                return Err(PipelineError::MissingPrerequisite(format!(
                    "latent mixing needs a fitted codec at {}; run `beatmix fit-codec` first",
                    path.display()
                )));
            }
            Some(load_codec(&path).map_err(input_err(&path))?)
        }
        Strategy::Bam => None,
    };

    let mut tracks = Vec::new();
    for e in &manifest.entries {
        let (Some(group_id), Some(beats)) = (e.group_id, &e.beats) else {
            continue;
        };
        let path = ws.resolve(beats);
        tracks.push(MixTrack {
            id: e.id.clone(),
            group_id,
            len_samples: e.num_samples as usize,
            grid: load_beat_annotation(&path).map_err(input_err(&path))?,
            caption: e.caption.clone(),
        });
    }
    let pass = PassConfig {
        strategy: opts.strategy,
        p: config.mixup_p,
        slots: opts.count,
        clip_samples: config.clip_samples,
        sample_rate: config.signal.sample_rate,
        seed: config.seed,
        ..PassConfig::default()
    };
    let specs = apply_mixup_pass(&tracks, &pass).map_err(|e| PipelineError::Config(e.to_string()))?;
    if specs.len() < opts.count {
        log::warn!(
            "only {} of {} clips planned: no track is long enough for a {}-sample clip",
            specs.len(),
            opts.count,
            config.clip_samples
        );
    }

    let needed: BTreeSet<&str> = specs
        .iter()
        .flat_map(|s| std::iter::once(s.track_a.as_str()).chain(s.track_b.as_deref()))
        .collect();
    let dir = ws.mix_dir();
    clear_outputs(&dir)?;
    std::fs::create_dir_all(&dir).map_err(internal_err("creating mix directory"))?;
    with_pool(config.jobs, || -> Result<()> {
        let waves: BTreeMap<&str, Waveform<f32>> = needed
            .par_iter()
            .map(|&id| {
                let entry = manifest.get(id).expect("planned tracks come from the manifest");
                let path = manifest.audio_path(ws, entry);
                let w = load_wav::<f32>(&path, config.signal.sample_rate).map_err(input_err(&path))?;
                Ok((id, w))
            })
            .collect::<Result<_>>()?;
        specs.par_iter().try_for_each(|spec| {
            let a = &waves[spec.track_a.as_str()];
            let b = spec.track_b.as_deref().map(|id| &waves[id]);
            let clip = render_clip(
                spec,
                a,
                b,
                codec.as_ref(),
                &config.signal,
                config.griffin_lim_iterations,
            )
            .map_err(internal_err(&spec.id))?;
            let bytes = encode_wav_pcm16(&clip).map_err(internal_err(&spec.id))?;
            let wav = dir.join(format!("{}.wav", spec.id));
            write_atomic(&wav, &bytes).map_err(internal_err(&wav.display().to_string()))?;
            write_json(spec, &dir.join(format!("{}.mixspec.json", spec.id)))
        })
    })??;
    let mixed = specs.iter().filter(|s| s.is_mixed()).count();
    Ok(MixSummary { specs, mixed })
}

/// Reads every `mix/*.mixspec.json`, ordered by id.
pub(crate) fn load_mix_specs(ws: &Workspace) -> Result<Vec<MixupSpec>> {
    let dir = ws.mix_dir();
    let listing = std::fs::read_dir(&dir).map_err(|_| {
        PipelineError::MissingPrerequisite("no mix outputs; run `beatmix mix` first".into())
    })?;
    let mut paths = Vec::new();
    for item in listing {
        let path = item.map_err(input_err(&dir))?.path();
        if path.to_string_lossy().ends_with(".mixspec.json") {
            paths.push(path);
        }
    }
    paths.sort();
    let mut specs: Vec<MixupSpec> = paths.iter().map(|p| read_json(p)).collect::<Result<_>>()?;
    specs.sort_by(|a, b| a.id.cmp(&b.id));
    if specs.is_empty() {
        return Err(PipelineError::MissingPrerequisite(
            "no mix outputs; run `beatmix mix` first".into(),
        ));
    }
    Ok(specs)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    /// `<track>#<k>`.
    pub id: String,
    pub track: String,
    pub start: u64,
    pub end: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentIndex {
    pub schema_version: u32,
    pub seconds: f64,
    pub sample_rate: u32,
    pub segment_samples: u64,
    pub segments: Vec<Segment>,
    pub warnings: Vec<String>,
}

/// Consecutive non-overlapping segments per track; a trailing partial
/// segment is dropped.
pub fn cmd_segment(ws: &Workspace, config: &PipelineConfig) -> Result<SegmentIndex> {
    config.validate()?;
    let manifest = Manifest::load(ws)?;
    let seg = config.signal.seconds_to_samples(config.segment_seconds) as u64;
    let mut segments = Vec::new();
    let mut warnings = Vec::new();
    for e in &manifest.entries {
        let n = e.num_samples / seg;
        if n == 0 {
            let w = format!(
                "{}: {:.2} s is shorter than one {} s segment",
                e.id, e.duration_seconds, config.segment_seconds
            );
            log::warn!("{w}");
            warnings.push(w);
        }
        for k in 0..n {
            segments.push(Segment {
                id: format!("{}#{k}", e.id),
                track: e.id.clone(),
                start: k * seg,
                end: (k + 1) * seg,
            });
        }
    }
    let index = SegmentIndex {
        schema_version: INDEX_VERSION,
        seconds: config.segment_seconds,
        sample_rate: config.signal.sample_rate,
        segment_samples: seg,
        segments,
        warnings,
    };
    write_json(&index, &ws.segments())?;
    Ok(index)
}
