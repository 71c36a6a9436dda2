use std::collections::BTreeMap;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::align::{eligible_offsets, pick_offset};
use super::mix::{bam_mix, blm_mix, blm_render, sample_mix_ratio};
use super::{MixupError, MixupSpec, Result, Strategy, DEFAULT_CLIP_SAMPLES};
use crate::beat::BeatGrid;
use crate::codec::LatentCodec;
use crate::dsp::{mel_spectrogram, SignalConfig, Waveform};
use crate::scalar::Real;

/// What the pass needs to know about one source track.
#[derive(Clone, Debug)]
pub struct MixTrack {
    pub id: String,
    pub group_id: u32,
    /// Length at the working sample rate.
    pub len_samples: usize,
    pub grid: BeatGrid,
    pub caption: String,
}

#[derive(Clone, Debug)]
pub struct PassConfig {
    pub strategy: Strategy,
    /// Probability that a slot is mixed.
    pub p: f64,
    pub slots: usize,
    pub clip_samples: usize,
    pub sample_rate: u32,
    pub seed: u64,
    pub id_prefix: String,
}

impl Default for PassConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Bam,
            p: 0.5,
            slots: 0,
            clip_samples: DEFAULT_CLIP_SAMPLES,
            sample_rate: 16_000,
            seed: 0,
            id_prefix: "mix-".into(),
        }
    }
}

/// Plans `cfg.slots` clips.
///
/// Each slot draws a base track uniformly from the tracks that have an
/// eligible downbeat, then mixes with probability `p` against a partner
/// drawn uniformly from the rest of its tempo group. Slots whose group has
/// no other eligible member stay unmixed. Every choice for a slot comes
/// from a generator seeded by one draw of the pass generator, and that
/// seed is recorded in the spec.
pub fn apply_mixup_pass(tracks: &[MixTrack], cfg: &PassConfig) -> Result<Vec<MixupSpec>> {
    if !(0.0..=1.0).contains(&cfg.p) {
        return Err(MixupError::InvalidConfig(format!("mixup rate {} outside [0, 1]", cfg.p)));
    }
    if cfg.clip_samples == 0 {
        return Err(MixupError::InvalidConfig("clip length is zero".into()));
    }
    let eligible: Vec<&MixTrack> = tracks
        .iter()
        .filter(|t| {
            !eligible_offsets(&t.grid, t.len_samples, cfg.clip_samples, cfg.sample_rate).is_empty()
        })
        .collect();
    if eligible.is_empty() {
        return Ok(Vec::new());
    }
    let mut by_group: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, t) in eligible.iter().enumerate() {
        by_group.entry(t.group_id).or_default().push(i);
    }

    let mut master = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut specs = Vec::with_capacity(cfg.slots);
    for slot in 0..cfg.slots {
        let seed = master.next_u64();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ia = rng.random_range(0..eligible.len());
        let a = eligible[ia];
        let coin = rng.random_bool(cfg.p);
        let partners: Vec<usize> = by_group[&a.group_id]
            .iter()
            .copied()
            .filter(|&j| j != ia)
            .collect();

        let offset_a;
        let mut partner = None;
        if coin && !partners.is_empty() {
            let b = eligible[partners[rng.random_range(0..partners.len())]];
            let oa = pick_offset(&a.id, &a.grid, a.len_samples, cfg.clip_samples, cfg.sample_rate, &mut rng)?;
            let ob = pick_offset(&b.id, &b.grid, b.len_samples, cfg.clip_samples, cfg.sample_rate, &mut rng)?;
            offset_a = oa;
            partner = Some((b, ob, sample_mix_ratio(&mut rng)));
        } else {
            offset_a = pick_offset(&a.id, &a.grid, a.len_samples, cfg.clip_samples, cfg.sample_rate, &mut rng)?;
        }

        let mut captions = vec![a.caption.clone()];
        if let Some((b, _, _)) = partner {
            captions.push(b.caption.clone());
        }
        specs.push(MixupSpec {
            id: format!("{}{slot:05}", cfg.id_prefix),
            track_a: a.id.clone(),
            offset_a,
            track_b: partner.map(|(b, _, _)| b.id.clone()),
            offset_b: partner.map(|(_, o, _)| o),
            lambda: partner.map(|(_, _, l)| l),
            strategy: cfg.strategy,
            clip_samples: cfg.clip_samples as u64,
            seed,
            captions,
        });
    }
    Ok(specs)
}

/// Produces the audio for one spec. `wave_b` is required for mixed specs
/// and `codec` for mixed BLM specs.
pub fn render_clip<S: Real, C: LatentCodec>(
    spec: &MixupSpec,
    wave_a: &Waveform<S>,
    wave_b: Option<&Waveform<S>>,
    codec: Option<&C>,
    signal: &SignalConfig,
    iterations: usize,
) -> Result<Waveform<S>> {
    let len = spec.clip_samples as usize;
    let x1 = wave_a.slice(spec.offset_a as usize, len)?;
    let (Some(track_b), Some(offset_b), Some(lambda)) = (&spec.track_b, spec.offset_b, spec.lambda)
    else {
        return Ok(x1);
    };
    let wave_b = wave_b.ok_or_else(|| MixupError::UnknownTrack(track_b.clone()))?;
    let x2 = wave_b.slice(offset_b as usize, len)?;
    match spec.strategy {
        Strategy::Bam => bam_mix(&x1, &x2, lambda),
        Strategy::Blm => {
            let codec = codec.ok_or_else(|| {
                MixupError::InvalidConfig("latent mixing needs a fitted codec".into())
            })?;
            let y1 = codec.encode(&mel_spectrogram(&x1, signal)?)?;
            let y2 = codec.encode(&mel_spectrogram(&x2, signal)?)?;
            let (_, wave) = blm_render(&blm_mix(&y1, &y2, lambda)?, codec, signal, iterations)?;
            Ok(wave.slice(0, len.min(wave.len()))?)
        }
    }
}
