use crate::dsp::MelSpectrogram;
use crate::scalar::Real;

/// Half-wave rectified frame-to-frame log-mel increase, summed over bands
/// and scaled so the largest value is 1. Frame 0 has no predecessor and is 0.
pub fn onset_envelope<S: Real>(mel: &MelSpectrogram<S>) -> Vec<S> {
    let n = mel.n_frames();
    let mut env = vec![S::zero(); n];
    for t in 1..n {
        env[t] = mel
            .frame(t)
            .iter()
            .zip(mel.frame(t - 1))
            .fold(S::zero(), |acc, (&cur, &prev)| acc + (cur - prev).max(S::zero()));
    }
    let peak = env.iter().fold(S::zero(), |m, &v| m.max(v));
    if peak > S::zero() {
        for v in &mut env {
            *v = *v / peak;
        }
    }
    env
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::SignalConfig;

    fn mel_from(values: Vec<f64>, frames: usize) -> MelSpectrogram<f64> {
        let cfg = SignalConfig {
            n_mels: 4,
            ..SignalConfig::default()
        };
        MelSpectrogram::from_values(values, frames, cfg).unwrap()
    }

    #[test]
    fn constant_mel_has_no_flux() {
        let env = onset_envelope(&mel_from(vec![-1.0; 40], 10));
        assert!(env.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn loud_frame_is_the_peak() {
        let mut values = vec![-4.0; 40];
        for m in 0..4 {
            values[6 * 4 + m] = -0.5;
        }
        let env = onset_envelope(&mel_from(values, 10));
        let argmax = (0..10).max_by(|&a, &b| env[a].total_cmp(&env[b])).unwrap();
        assert_eq!(argmax, 6);
        assert_eq!(env[6], 1.0);
        assert!(env.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }
}
