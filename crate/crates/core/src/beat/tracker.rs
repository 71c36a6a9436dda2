use super::{frame_to_seconds, BeatConfig, BeatError, Result, MAX_TEMPO_BPM, MIN_TEMPO_BPM};
use crate::dsp::SignalConfig;
use crate::scalar::Real;

/// Dynamic-programming beat tracker.
///
/// Maximises `Σ env(bᵢ) − tightness · Σ ln²((bᵢ₊₁ − bᵢ) / τ)` over beat frame
/// sequences, `τ` being the beat period in frames. Predecessors are searched
/// in `[t − 2τ, t − τ/2]`. Returned times are seconds, strictly
/// ascending, never past the last analysed frame.
pub fn track_beats<S: Real>(
    env: &[S],
    tempo_bpm: f64,
    signal: &SignalConfig,
    cfg: &BeatConfig,
) -> Result<Vec<f64>> {
    if !(MIN_TEMPO_BPM..=MAX_TEMPO_BPM).contains(&tempo_bpm) {
        return Err(BeatError::InvalidTempo(tempo_bpm));
    }
    let local: Vec<f64> = env.iter().map(|v| v.as_f64()).collect();
    if local.iter().all(|&v| v <= 1e-12) {
        return Err(BeatError::NoOnsets);
    }
    let n = local.len();
    let fps = f64::from(signal.sample_rate) / signal.hop as f64;
    let period = 60.0 * fps / tempo_bpm;
    let near = ((period / 2.0).round() as usize).max(1);
    let far = ((2.0 * period).round() as usize).max(near);

    let mut score = vec![0.0f64; n];
    let mut backlink: Vec<Option<usize>> = vec![None; n];
    for t in 0..n {
        let mut best: Option<(f64, usize)> = None;
        if t >= near {
            let first = t.saturating_sub(far);
            for p in first..=t - near {
                let ratio = (t - p) as f64 / period;
                let cand = score[p] - cfg.tightness * ratio.ln().powi(2);
                if best.is_none_or(|(b, _)| cand > b) {
                    best = Some((cand, p));
                }
            }
        }
        match best {
            Some((b, p)) => {
                score[t] = local[t] + b;
                backlink[t] = Some(p);
            }
            None => score[t] = local[t],
        }
    }

    // the final beat lies within one period of the end
    let tail = n.saturating_sub(period.round() as usize);
    let mut cur = (tail..n)
        .max_by(|&a, &b| score[a].total_cmp(&score[b]).then(b.cmp(&a)))
        .ok_or(BeatError::NoOnsets)?;
    let mut frames = vec![cur];
    while let Some(prev) = backlink[cur] {
        frames.push(prev);
        cur = prev;
    }
    frames.reverse();

    let last_time = (n.saturating_sub(1) * signal.hop) as f64 / f64::from(signal.sample_rate);
    Ok(frames
        .into_iter()
        .map(|f| frame_to_seconds(f, signal))
        .filter(|&t| t <= last_time)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invalid_tempo_is_rejected() {
        let env = vec![0.5f64; 100];
        let err = track_beats(&env, 400.0, &SignalConfig::default(), &BeatConfig::default());
        assert!(matches!(err, Err(BeatError::InvalidTempo(_))));
    }

    #[test]
    fn silent_envelope_has_no_onsets() {
        let env = vec![0.0f64; 1000];
        let err = track_beats(&env, 120.0, &SignalConfig::default(), &BeatConfig::default());
        assert!(matches!(err, Err(BeatError::NoOnsets)));
    }

    #[test]
    fn pulses_are_followed() {
        let signal = SignalConfig::default();
        let mut env = vec![0.0f64; 1000];
        for k in 0..20 {
            env[20 + 50 * k] = 1.0;
        }
        let beats = track_beats(&env, 120.0, &signal, &BeatConfig::default()).unwrap();
        let beat_frames: Vec<usize> = beats
            .iter()
            .map(|&t| ((t - frame_to_seconds(0, &signal)) * 100.0).round() as usize)
            .collect();
        for k in 1..19 {
            assert!(beat_frames.contains(&(20 + 50 * k)), "{beat_frames:?}");
        }
        assert!(beats.windows(2).all(|w| w[1] > w[0]));
    }
}
