use rand::Rng;

use super::{MixupError, Result};
use crate::beat::BeatGrid;

/// Sample offsets of downbeats that leave at least `clip_samples` of audio.
pub(crate) fn eligible_offsets(
    grid: &BeatGrid,
    len: usize,
    clip_samples: usize,
    sample_rate: u32,
) -> Vec<u64> {
    grid.downbeat_times
        .iter()
        .map(|&t| (t * f64::from(sample_rate)).round().max(0.0) as u64)
        .filter(|&start| start as usize + clip_samples <= len)
        .collect()
}

pub(crate) fn pick_offset<R: Rng + ?Sized>(
    track: &str,
    grid: &BeatGrid,
    len: usize,
    clip_samples: usize,
    sample_rate: u32,
    rng: &mut R,
) -> Result<u64> {
    let offsets = eligible_offsets(grid, len, clip_samples, sample_rate);
    if offsets.is_empty() {
        return Err(MixupError::NoEligibleDownbeat {
            track: track.to_string(),
            clip_samples,
        });
    }
    Ok(offsets[rng.random_range(0..offsets.len())])
}

/// Picks one eligible downbeat per track, uniformly, and returns both as
/// sample offsets.
pub fn align_downbeats<R: Rng + ?Sized>(
    grid_a: &BeatGrid,
    grid_b: &BeatGrid,
    len_a: usize,
    len_b: usize,
    clip_samples: usize,
    sample_rate: u32,
    rng: &mut R,
) -> Result<(u64, u64)> {
    let a = pick_offset("a", grid_a, len_a, clip_samples, sample_rate, rng)?;
    let b = pick_offset("b", grid_b, len_b, clip_samples, sample_rate, rng)?;
    Ok((a, b))
}
