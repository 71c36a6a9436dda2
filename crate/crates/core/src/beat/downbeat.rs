use super::{seconds_to_frame, BeatConfig, BeatError, Result, BEATS_PER_BAR};
use crate::dsp::MelSpectrogram;
use crate::scalar::Real;

/// Picks the 4/4 bar phase whose beats carry the most low-band power and
/// returns every fourth beat from that phase. Ties go to the earliest phase.
pub fn infer_downbeats<S: Real>(
    beat_times: &[f64],
    mel: &MelSpectrogram<S>,
    cfg: &BeatConfig,
) -> Result<Vec<f64>> {
    if beat_times.len() < BEATS_PER_BAR {
        return Err(BeatError::TooFewBeats {
            found: beat_times.len(),
        });
    }
    let signal = mel.config();
    let bands = cfg.low_band_bins.clamp(1, mel.n_mels());
    // frames whose windows still overlap the beat onset
    let span = signal.window.div_ceil(2 * signal.hop).max(1);
    let last = mel.n_frames().saturating_sub(1);

    let beat_power = |t: f64| -> f64 {
        let start = seconds_to_frame(t, signal).min(last);
        let end = (start + span).min(last + 1);
        let mut acc = 0.0;
        for f in start..end {
            for &v in &mel.frame(f)[..bands] {
                acc += 10f64.powf(2.0 * v.as_f64());
            }
        }
        acc / ((end - start) * bands) as f64
    };
    let powers: Vec<f64> = beat_times.iter().map(|&t| beat_power(t)).collect();

    let mut best_phase = 0;
    let mut best_score = f64::NEG_INFINITY;
    for phase in 0..BEATS_PER_BAR {
        let picks: Vec<f64> = powers.iter().skip(phase).step_by(BEATS_PER_BAR).copied().collect();
        let score = picks.iter().sum::<f64>() / picks.len() as f64;
        if score > best_score {
            best_score = score;
            best_phase = phase;
        }
    }
    Ok(beat_times
        .iter()
        .skip(best_phase)
        .step_by(BEATS_PER_BAR)
        .copied()
        .collect())
}
