use super::{BeatConfig, BeatError, Result};
use crate::dsp::SignalConfig;
use crate::scalar::Real;

fn frames_per_second(signal: &SignalConfig) -> f64 {
    f64::from(signal.sample_rate) / signal.hop as f64
}

/// Autocorrelation tempo estimate.
///
/// The mean-removed envelope is autocorrelated (unbiased normalisation) over
/// the lags of the configured BPM search range; each lag is weighted by a
/// log-Gaussian prior in octaves around `prior_center_bpm`. The winning lag
/// is refined by parabolic interpolation.
pub fn estimate_tempo<S: Real>(env: &[S], signal: &SignalConfig, cfg: &BeatConfig) -> Result<f64> {
    let fps = frames_per_second(signal);
    let needed = (cfg.min_seconds * fps).ceil() as usize;
    if env.len() < needed {
        return Err(BeatError::EnvelopeTooShort {
            frames: env.len(),
            needed,
        });
    }
    let x: Vec<f64> = env.iter().map(|v| v.as_f64()).collect();
    if x.iter().all(|&v| v <= 1e-12) {
        return Err(BeatError::NoOnsets);
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let centered: Vec<f64> = x.iter().map(|v| v - mean).collect();

    let lag_min = ((60.0 * fps / cfg.search_max_bpm).floor() as usize).max(1);
    let lag_max = ((60.0 * fps / cfg.search_min_bpm).ceil() as usize).min(centered.len() - 1);
    if lag_min + 2 > lag_max {
        return Err(BeatError::EnvelopeTooShort {
            frames: env.len(),
            needed,
        });
    }

    let prior = |lag: f64| {
        let bpm = 60.0 * fps / lag;
        let octaves = (bpm / cfg.prior_center_bpm).log2() / cfg.prior_sigma_octaves;
        (-0.5 * octaves * octaves).exp()
    };
    // one extra lag on each side for interpolation
    let lo = lag_min.saturating_sub(1).max(1);
    let hi = (lag_max + 1).min(centered.len() - 1);
    let score: Vec<f64> = (lo..=hi)
        .map(|lag| {
            let n = centered.len() - lag;
            let ac = (0..n).map(|t| centered[t] * centered[t + lag]).sum::<f64>() / n as f64;
            ac * prior(lag as f64)
        })
        .collect();
    let idx_of = |lag: usize| lag - lo;
    let best = (lag_min..=lag_max)
        .max_by(|&a, &b| score[idx_of(a)].total_cmp(&score[idx_of(b)]).then(b.cmp(&a)))
        .expect("non-empty lag range");
    if score[idx_of(best)] <= 0.0 {
        return Err(BeatError::NoOnsets);
    }

    let mut lag = best as f64;
    if best > lo && best < hi {
        let (a, b, c) = (
            score[idx_of(best - 1)],
            score[idx_of(best)],
            score[idx_of(best + 1)],
        );
        let denom = a - 2.0 * b + c;
        if denom < 0.0 {
            lag += (0.5 * (a - c) / denom).clamp(-0.5, 0.5);
        }
    }
    let bpm = 60.0 * fps / lag;
    Ok(bpm.clamp(cfg.search_min_bpm, cfg.search_max_bpm))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pulse_env(period_frames: f64, frames: usize) -> Vec<f64> {
        let mut env = vec![0.0; frames];
        let mut t = 10.0f64;
        while (t.round() as usize) < frames {
            env[t.round() as usize] = 1.0;
            t += period_frames;
        }
        env
    }

    #[test]
    fn pulse_trains_resolve_to_their_tempo() {
        let signal = SignalConfig::default();
        let cfg = BeatConfig::default();
        for bpm in [70.0, 90.0, 120.0, 150.0] {
            let env = pulse_env(60.0 * 100.0 / bpm, 1500);
            let got = estimate_tempo(&env, &signal, &cfg).unwrap();
            assert!((got - bpm).abs() < 2.0, "{bpm}: {got}");
        }
    }

    #[test]
    fn silence_has_no_onsets() {
        let signal = SignalConfig::default();
        let env = vec![0.0f64; 1000];
        assert!(matches!(
            estimate_tempo(&env, &signal, &BeatConfig::default()),
            Err(BeatError::NoOnsets)
        ));
    }

    #[test]
    fn short_envelope_is_rejected() {
        let signal = SignalConfig::default();
        let env = vec![1.0f64; 100];
        assert!(matches!(
            estimate_tempo(&env, &signal, &BeatConfig::default()),
            Err(BeatError::EnvelopeTooShort { .. })
        ));
    }
}
