//! Self-contained stand-ins for learned embedding and classifier models,
//! plus the stage that writes every embedding file `eval` consumes.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::stages::load_mix_specs;
use super::{
    input_err, internal_err, read_json, with_pool, write_json, Manifest, PipelineConfig, PipelineError, Result,
    SegmentIndex, Workspace,
};
use crate::dsp::{load_wav, mel_spectrogram, DspError, SignalConfig, Waveform};
use crate::embed::{
    save_embedding_set, save_posterior_set, ClassPosterior, EmbedError, Embedding, EmbeddingClient, EmbeddingSet,
    HttpConfig, Modality, PosteriorSet, Query,
};
use crate::scalar::Real;

/// Classes of [`band_posterior`].
pub const BAND_CLASSES: usize = 10;

/// Length of the built-in audio and text vectors at the default 128 mels.
pub const BUILTIN_DIM: usize = 256;

/// Per-band mean (relative to the overall mean) and standard deviation of
/// the log-mel spectrogram: `2 · n_mels` values.
pub fn melstat_embedding<S: Real>(wave: &Waveform<S>, signal: &SignalConfig) -> std::result::Result<Vec<f64>, DspError> {
    let mel = mel_spectrogram(wave, signal)?;
    let (t, f) = (mel.n_frames(), mel.n_mels());
    let mut mean = vec![0.0f64; f];
    let mut sq = vec![0.0f64; f];
    for frame in 0..t {
        for (m, v) in mel.frame(frame).iter().enumerate() {
            let v = v.as_f64();
            mean[m] += v;
            sq[m] += v * v;
        }
    }
    let n = t as f64;
    let mut out = Vec::with_capacity(2 * f);
    let overall = mean.iter().sum::<f64>() / (n * f as f64);
    for m in 0..f {
        out.push(mean[m] / n - overall);
    }
    for m in 0..f {
        let mu = mean[m] / n;
        out.push((sq[m] / n - mu * mu).max(0.0).sqrt());
    }
    Ok(out)
}

/// Signed hashed character trigrams of the lower-cased text.
pub fn hashgram_embedding(text: &str, dim: usize) -> Vec<f64> {
    let text = text.trim().to_lowercase();
    let text = if text.is_empty() { "<empty>".to_string() } else { text };
    let chars: Vec<char> = format!("  {text} ").chars().collect();
    let mut out = vec![0.0f64; dim];
    for w in chars.windows(3) {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for c in w {
            for b in c.to_string().bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
        out[(h % dim as u64) as usize] += sign;
    }
    out
}

/// Softmax over the mean level (in dB, 6 dB per unit) of `k` contiguous
/// mel band groups.
pub fn band_posterior<S: Real>(
    wave: &Waveform<S>,
    signal: &SignalConfig,
    k: usize,
) -> std::result::Result<Vec<f64>, DspError> {
    let mel = mel_spectrogram(wave, signal)?;
    let (t, f) = (mel.n_frames(), mel.n_mels());
    let mut band = vec![0.0f64; f];
    for frame in 0..t {
        for (m, v) in mel.frame(frame).iter().enumerate() {
            band[m] += v.as_f64();
        }
    }
    let logits: Vec<f64> = (0..k)
        .map(|c| {
            let (lo, hi) = (c * f / k, ((c + 1) * f / k).max(c * f / k + 1));
            let mean = band[lo..hi].iter().sum::<f64>() / ((hi - lo) * t) as f64;
            20.0 * mean / 6.0
        })
        .collect();
    let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|l| (l - top).exp()).collect();
    let z: f64 = exp.iter().sum();
    Ok(exp.iter().map(|e| e / z).collect())
}

#[derive(Clone, Debug)]
pub enum EmbedProvider {
    Builtin,
    Http(HttpConfig),
}

impl EmbedProvider {
    fn name(&self) -> String {
        match self {
            EmbedProvider::Builtin => "melstat/hashgram".into(),
            EmbedProvider::Http(cfg) => format!("http:{}", cfg.endpoint),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmbedSummary {
    /// File name → record count.
    pub files: BTreeMap<String, usize>,
    pub providers: BTreeMap<String, String>,
}

struct Embedder {
    provider: EmbedProvider,
    client: Option<EmbeddingClient>,
    signal: SignalConfig,
}

impl Embedder {
    fn dim(&self) -> usize {
        match &self.provider {
            EmbedProvider::Builtin => 2 * self.signal.n_mels,
            EmbedProvider::Http(cfg) => cfg.dim,
        }
    }

    fn audio(&self, items: &[(String, Waveform<f32>)]) -> Result<Vec<Embedding<f64>>> {
        match &self.client {
            None => items
                .par_iter()
                .map(|(id, w)| {
                    let v = melstat_embedding(w, &self.signal).map_err(internal_err(id))?;
                    Embedding::new(id.clone(), Modality::Audio, v).map_err(internal_err(id))
                })
                .collect(),
            Some(client) => {
                let queries: Vec<Query<'_, f32>> = items
                    .iter()
                    .map(|(id, wave)| Query::Audio { id, wave })
                    .collect();
                collect_fetched(client.fetch_many(&queries))
            }
        }
    }

    fn text(&self, items: &[(String, String)]) -> Result<Vec<Embedding<f64>>> {
        match &self.client {
            None => items
                .iter()
                .map(|(id, text)| {
                    Embedding::new(id.clone(), Modality::Text, hashgram_embedding(text, self.dim()))
                        .map_err(internal_err(id))
                })
                .collect(),
            Some(client) => {
                let queries: Vec<Query<'_, f64>> = items
                    .iter()
                    .map(|(id, text)| Query::Text { id, text })
                    .collect();
                collect_fetched(client.fetch_many(&queries))
            }
        }
    }
}

fn collect_fetched<S: Real>(
    results: Vec<std::result::Result<crate::embed::Fetched<S>, EmbedError>>,
) -> Result<Vec<Embedding<f64>>> {
    results
        .into_iter()
        .map(|r| {
            let f = r.map_err(|e| PipelineError::Internal {
                context: "embedding service".into(),
                message: e.to_string(),
            })?;
            let e = f.embedding;
            Embedding::new(e.id, e.modality, e.vector.iter().map(|v| v.as_f64()).collect())
                .map_err(internal_err("embedding service"))
        })
        .collect()
}

fn to_set(dim: usize, items: Vec<Embedding<f64>>) -> Result<EmbeddingSet<f64>> {
    let mut set = EmbeddingSet::new(dim);
    for e in items {
        let id = e.id.clone();
        set.insert(e).map_err(internal_err(&id))?;
    }
    Ok(set)
}

fn posteriors(items: &[(String, Waveform<f32>)], signal: &SignalConfig) -> Result<PosteriorSet> {
    let probs: Vec<ClassPosterior> = items
        .par_iter()
        .map(|(id, w)| {
            let p = band_posterior(w, signal, BAND_CLASSES).map_err(internal_err(id))?;
            ClassPosterior::new(id.clone(), p).map_err(internal_err(id))
        })
        .collect::<Result<_>>()?;
    let mut set = PosteriorSet::new(BAND_CLASSES);
    for p in probs {
        let id = p.id.clone();
        set.insert(p).map_err(internal_err(&id))?;
    }
    Ok(set)
}

/// Writes into `emb/`: audio embeddings of the mixed clips
/// (`generated.emb`), of the unmixed source-A excerpt each clip starts
/// from (`references.emb`) and of every training segment
/// (`segments.emb`); text embeddings of each clip's joined captions
/// (`captions.emb`); band posteriors for clips and references.
pub fn cmd_embed(ws: &Workspace, config: &PipelineConfig, provider: &EmbedProvider) -> Result<EmbedSummary> {
    config.validate()?;
    let manifest = Manifest::load(ws)?;
    let specs = load_mix_specs(ws)?;
    let seg_path = ws.segments();
    if !seg_path.is_file() {
        return Err(PipelineError::MissingPrerequisite(
            "no segment index; run `beatmix segment` first".into(),
        ));
    }
    let index: SegmentIndex = read_json(&seg_path)?;
    let signal = config.signal.clone();
    let client = match provider {
        EmbedProvider::Builtin => None,
        EmbedProvider::Http(cfg) => Some(EmbeddingClient::new(cfg.clone()).map_err(internal_err("http client"))?),
    };
    let embedder = Embedder {
        provider: provider.clone(),
        client,
        signal: signal.clone(),
    };
    let dim = embedder.dim();
    let sr = signal.sample_rate;
    let load_track = |id: &str| -> Result<Waveform<f32>> {
        let entry = manifest.get(id).ok_or_else(|| PipelineError::Input {
            path: ws.manifest(),
            message: format!("unknown track {id:?}"),
        })?;
        let path = manifest.audio_path(ws, entry);
        load_wav(&path, sr).map_err(input_err(&path))
    };

    let (generated, references, segments) = with_pool(config.jobs, || -> Result<_> {
        let generated: Vec<(String, Waveform<f32>)> = specs
            .par_iter()
            .map(|s| {
                let path = ws.mix_dir().join(format!("{}.wav", s.id));
                Ok((s.id.clone(), load_wav(&path, sr).map_err(input_err(&path))?))
            })
            .collect::<Result<_>>()?;
        let references: Vec<(String, Waveform<f32>)> = specs
            .par_iter()
            .map(|s| {
                let w = load_track(&s.track_a)?;
                let clip = w
                    .slice(s.offset_a as usize, s.clip_samples as usize)
                    .map_err(internal_err(&s.id))?;
                Ok((s.id.clone(), clip))
            })
            .collect::<Result<_>>()?;
        let mut by_track: BTreeMap<&str, Vec<&super::Segment>> = BTreeMap::new();
        for seg in &index.segments {
            by_track.entry(seg.track.as_str()).or_default().push(seg);
        }
        let per_track: Vec<Vec<(String, Waveform<f32>)>> = by_track
            .par_iter()
            .map(|(track, segs)| {
                let w = load_track(track)?;
                segs.iter()
                    .map(|s| {
                        let clip = w
                            .slice(s.start as usize, (s.end - s.start) as usize)
                            .map_err(internal_err(&s.id))?;
                        Ok((s.id.clone(), clip))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        Ok((generated, references, per_track.into_iter().flatten().collect::<Vec<_>>()))
    })??;
    if segments.is_empty() {
        return Err(PipelineError::MissingPrerequisite(
            "the segment index is empty; no track is long enough".into(),
        ));
    }
    let captions: Vec<(String, String)> = specs
        .iter()
        .map(|s| (s.id.clone(), s.captions.join(" | ")))
        .collect();

    let dir = ws.emb_dir();
    let mut files = BTreeMap::new();
    let sets = with_pool(config.jobs, || -> Result<_> {
        Ok([
            ("generated.emb", to_set(dim, embedder.audio(&generated)?)?),
            ("references.emb", to_set(dim, embedder.audio(&references)?)?),
            ("segments.emb", to_set(dim, embedder.audio(&segments)?)?),
            ("captions.emb", to_set(dim, embedder.text(&captions)?)?),
        ])
    })??;
    for (name, set) in &sets {
        let path = dir.join(name);
        save_embedding_set(set, &path).map_err(internal_err(&path.display().to_string()))?;
        files.insert(name.to_string(), set.len());
    }
    let posts = with_pool(config.jobs, || -> Result<_> {
        Ok([
            ("generated.pos", posteriors(&generated, &signal)?),
            ("references.pos", posteriors(&references, &signal)?),
        ])
    })??;
    for (name, set) in &posts {
        let path = dir.join(name);
        save_posterior_set(set, &path).map_err(internal_err(&path.display().to_string()))?;
        files.insert(name.to_string(), set.len());
    }
    let mut providers = BTreeMap::new();
    providers.insert("embedding".to_string(), provider.name());
    providers.insert("posterior".to_string(), format!("band{BAND_CLASSES}"));
    write_json(&providers, &dir.join("providers.json"))?;
    Ok(EmbedSummary { files, providers })
}
