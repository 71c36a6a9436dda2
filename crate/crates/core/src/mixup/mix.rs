use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use super::{MixupError, Result};
use crate::codec::{LatentCodec, LatentTensor};
use crate::dsp::{GriffinLim, MelSpectrogram, PhaseInit, SignalConfig, Waveform};
use crate::scalar::Real;

const LAMBDA_EPS: f64 = 1e-9;

/// Mixing ratio, kept inside `[1e-9, 1 − 1e-9]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct MixRatio(f64);

impl MixRatio {
    /// Clamps into the open unit interval. NaN is rejected.
    pub fn new(lambda: f64) -> Result<Self> {
        if lambda.is_nan() {
            return Err(MixupError::InvalidConfig("mixing ratio is NaN".into()));
        }
        Ok(Self(lambda.clamp(LAMBDA_EPS, 1.0 - LAMBDA_EPS)))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `1 − λ`.
    pub fn complement(self) -> Self {
        Self((1.0 - self.0).clamp(LAMBDA_EPS, 1.0 - LAMBDA_EPS))
    }
}

impl TryFrom<f64> for MixRatio {
    type Error = MixupError;

    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<MixRatio> for f64 {
    fn from(r: MixRatio) -> f64 {
        r.0
    }
}

/// Draws `λ ~ Beta(5, 5)`.
pub fn sample_mix_ratio<R: Rng + ?Sized>(rng: &mut R) -> MixRatio {
    let beta = Beta::new(5.0, 5.0).expect("valid beta parameters");
    MixRatio::new(beta.sample(rng)).expect("beta draws are finite")
}

/// `λ·x1 + (1 − λ)·x2`, sample by sample.
pub fn bam_mix<S: Real>(x1: &Waveform<S>, x2: &Waveform<S>, lambda: MixRatio) -> Result<Waveform<S>> {
    if x1.len() != x2.len() {
        return Err(MixupError::LengthMismatch(x1.len(), x2.len()));
    }
    if x1.sample_rate() != x2.sample_rate() {
        return Err(MixupError::InvalidConfig(format!(
            "sample rates differ: {} vs {}",
            x1.sample_rate(),
            x2.sample_rate()
        )));
    }
    let (a, b) = (S::lit(lambda.value()), S::lit(1.0 - lambda.value()));
    let out = x1
        .samples()
        .iter()
        .zip(x2.samples())
        .map(|(&u, &v)| a * u + b * v)
        .collect();
    Ok(Waveform::new(out, x1.sample_rate())?)
}

/// `λ·y1 + (1 − λ)·y2`, entry by entry.
pub fn blm_mix<S: Real>(
    y1: &LatentTensor<S>,
    y2: &LatentTensor<S>,
    lambda: MixRatio,
) -> Result<LatentTensor<S>> {
    if y1.shape() != y2.shape() {
        return Err(MixupError::ShapeMismatch(y1.shape(), y2.shape()));
    }
    if y1.codec_id() != y2.codec_id() {
        return Err(crate::codec::CodecError::CodecMismatch {
            expected: y1.codec_id().to_string(),
            got: y2.codec_id().to_string(),
        }
        .into());
    }
    let (a, b) = (S::lit(lambda.value()), S::lit(1.0 - lambda.value()));
    let out = y1
        .values()
        .iter()
        .zip(y2.values())
        .map(|(&u, &v)| a * u + b * v)
        .collect();
    Ok(LatentTensor::from_parts(out, y1.shape(), y1.codec_id())?)
}

/// Decodes a latent to a mel, then to audio with Griffin-Lim.
pub fn blm_render<S: Real, C: LatentCodec>(
    y: &LatentTensor<S>,
    codec: &C,
    config: &SignalConfig,
    iterations: usize,
) -> Result<(MelSpectrogram<S>, Waveform<S>)> {
    let mel = codec.decode(y, config)?;
    let signal = GriffinLim::new(config)?
        .invert(&mel, iterations, PhaseInit::Zero)?
        .signal;
    let wave = Waveform::new(signal, config.sample_rate)?;
    Ok((mel, wave))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ratio_is_clamped() {
        assert_eq!(MixRatio::new(1.0).unwrap().value(), 1.0 - 1e-9);
        assert_eq!(MixRatio::new(-3.0).unwrap().value(), 1e-9);
        assert!(MixRatio::new(f64::NAN).is_err());
    }

    #[test]
    fn ratio_serializes_as_a_number() {
        let r = MixRatio::new(0.25).unwrap();
        assert_eq!(serde_json::to_string(&r).unwrap(), "0.25");
        let back: MixRatio = serde_json::from_str("0.25").unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn impulses_mix_linearly() {
        let x1 = Waveform::new(vec![1.0f64, 0.0, 0.0], 16_000).unwrap();
        let x2 = Waveform::new(vec![0.0f64, 1.0, 0.0], 16_000).unwrap();
        let y = bam_mix(&x1, &x2, MixRatio::new(0.5).unwrap()).unwrap();
        assert_eq!(y.samples(), &[0.5, 0.5, 0.0]);
    }

    #[test]
    fn lengths_must_match() {
        let x1 = Waveform::new(vec![0.0f64; 4], 16_000).unwrap();
        let x2 = Waveform::new(vec![0.0f64; 5], 16_000).unwrap();
        assert!(matches!(
            bam_mix(&x1, &x2, MixRatio::new(0.5).unwrap()),
            Err(MixupError::LengthMismatch(4, 5))
        ));
    }

    #[test]
    fn opposite_latents_cancel() {
        let y1 = LatentTensor::from_parts(vec![1.0f64, -2.0, 3.5, 0.25], (1, 2, 2), "c").unwrap();
        let y2 = LatentTensor::from_parts(vec![-1.0f64, 2.0, -3.5, -0.25], (1, 2, 2), "c").unwrap();
        let y = blm_mix(&y1, &y2, MixRatio::new(0.5).unwrap()).unwrap();
        assert!(y.values().iter().all(|&v| v == 0.0));
        let other = LatentTensor::<f64>::zeros((1, 4, 1), "c");
        assert!(matches!(
            blm_mix(&y1, &other, MixRatio::new(0.5).unwrap()),
            Err(MixupError::ShapeMismatch(..))
        ));
    }

    #[test]
    fn same_seed_same_ratios() {
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..16).map(|_| sample_mix_ratio(&mut rng).value()).collect::<Vec<_>>()
        };
        assert_eq!(draw(11), draw(11));
        assert_ne!(draw(11), draw(12));
    }
}
