use super::{DspError, Result, Waveform};
use crate::scalar::Real;

const TAPS: usize = 64;
const HALF: i64 = (TAPS / 2) as i64;
const KAISER_BETA: f64 = 8.0;
const ROLLOFF: f64 = 0.95;

/// Zeroth-order modified Bessel function of the first kind (power series).
fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..64 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Kaiser-windowed sinc interpolation with a fixed 64-tap kernel per output
/// phase. The cutoff tracks the lower of the two Nyquist rates.
pub fn resample<S: Real>(wave: &Waveform<S>, target_rate: u32) -> Result<Waveform<S>> {
    if target_rate == 0 {
        return Err(DspError::InvalidInput("target sample rate must be positive".into()));
    }
    let src_rate = wave.sample_rate();
    if src_rate == target_rate {
        return Ok(wave.clone());
    }
    let input: Vec<f64> = wave.samples().iter().map(|s| s.as_f64()).collect();
    let (src, dst) = (u64::from(src_rate), u64::from(target_rate));
    let out_len = ((input.len() as u64 * dst + src / 2) / src) as usize;
    let cutoff = ROLLOFF * (target_rate as f64 / src_rate as f64).min(1.0);
    let norm_i0 = bessel_i0(KAISER_BETA);

    let mut weights = [0.0f64; TAPS];
    let mut out = Vec::with_capacity(out_len);
    for n in 0..out_len as u64 {
        let num = n * src;
        let base = (num / dst) as i64;
        let frac = (num % dst) as f64 / dst as f64;
        let mut wsum = 0.0;
        for (j, w) in weights.iter_mut().enumerate() {
            let k = base - HALF + 1 + j as i64;
            let d = frac - (k - base) as f64;
            let r = d / HALF as f64;
            let win = if r.abs() >= 1.0 {
                0.0
            } else {
                bessel_i0(KAISER_BETA * (1.0 - r * r).sqrt()) / norm_i0
            };
            *w = cutoff * sinc(cutoff * d) * win;
            wsum += *w;
        }
        let mut acc = 0.0;
        for (j, w) in weights.iter().enumerate() {
            let k = base - HALF + 1 + j as i64;
            if k >= 0 && (k as usize) < input.len() {
                acc += input[k as usize] * w;
            }
        }
        out.push(S::lit(acc / wsum));
    }
    Waveform::new(out, target_rate)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_matches_reference_values() {
        // I0(1), I0(8) from standard tables
        assert!((bessel_i0(1.0) - 1.266_065_877_752_008_4).abs() < 1e-12);
        assert!((bessel_i0(8.0) - 427.564_115_721_804_74).abs() < 1e-9);
    }

    #[test]
    fn length_follows_rate_ratio() {
        let w = Waveform::new(vec![0.0f64; 44_100], 44_100).unwrap();
        assert_eq!(resample(&w, 16_000).unwrap().len(), 16_000);
        let w = Waveform::new(vec![0.0f64; 8_000], 8_000).unwrap();
        assert_eq!(resample(&w, 16_000).unwrap().len(), 16_000);
    }

    #[test]
    fn dc_is_preserved_away_from_edges() {
        let w = Waveform::new(vec![0.5f64; 22_050], 22_050).unwrap();
        let r = resample(&w, 16_000).unwrap();
        for &s in &r.samples()[100..r.len() - 100] {
            assert!((s - 0.5).abs() < 1e-9, "{s}");
        }
    }
}
