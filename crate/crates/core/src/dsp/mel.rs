use super::{DspError, MelSpectrogram, Result, SignalConfig, StftPlan, Waveform};
use crate::scalar::Real;

const F_SP: f64 = 200.0 / 3.0;
const MIN_LOG_HZ: f64 = 1000.0;
const MIN_LOG_MEL: f64 = MIN_LOG_HZ / F_SP;

fn log_step() -> f64 {
    6.4f64.ln() / 27.0
}

/// Slaney mel scale: linear below 1 kHz, logarithmic above.
pub(crate) fn hz_to_mel(hz: f64) -> f64 {
    if hz >= MIN_LOG_HZ {
        MIN_LOG_MEL + (hz / MIN_LOG_HZ).ln() / log_step()
    } else {
        hz / F_SP
    }
}

pub(crate) fn mel_to_hz(mel: f64) -> f64 {
    if mel >= MIN_LOG_MEL {
        MIN_LOG_HZ * (log_step() * (mel - MIN_LOG_MEL)).exp()
    } else {
        F_SP * mel
    }
}

/// Triangular filters on the Slaney mel scale, each scaled to unit area in Hz.
#[derive(Clone, Debug)]
pub struct MelFilterbank<S> {
    n_mels: usize,
    n_bins: usize,
    /// dense `n_mels × n_bins`, row-major
    weights: Vec<S>,
    /// per-filter nonzero bin range
    support: Vec<(usize, usize)>,
    centers_hz: Vec<f64>,
}

impl<S: Real> MelFilterbank<S> {
    pub fn new(config: &SignalConfig) -> Result<Self> {
        config.validate()?;
        let n_mels = config.n_mels;
        let n_bins = config.n_bins();
        let lo = hz_to_mel(config.fmin);
        let hi = hz_to_mel(config.fmax);
        let edges: Vec<f64> = (0..n_mels + 2)
            .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (n_mels + 1) as f64))
            .collect();
        let bin_hz = f64::from(config.sample_rate) / config.fft_size as f64;

        let mut weights = vec![S::zero(); n_mels * n_bins];
        let mut support = Vec::with_capacity(n_mels);
        for m in 0..n_mels {
            let (left, center, right) = (edges[m], edges[m + 1], edges[m + 2]);
            let enorm = 2.0 / (right - left);
            let mut first = n_bins;
            let mut last = 0;
            for k in 0..n_bins {
                let f = k as f64 * bin_hz;
                let rising = (f - left) / (center - left);
                let falling = (right - f) / (right - center);
                let w = rising.min(falling).max(0.0) * enorm;
                if w > 0.0 {
                    weights[m * n_bins + k] = S::lit(w);
                    first = first.min(k);
                    last = last.max(k + 1);
                }
            }
            support.push(if first < last { (first, last) } else { (0, 0) });
        }
        Ok(Self {
            n_mels,
            n_bins,
            weights,
            support,
            centers_hz: edges[1..=n_mels].to_vec(),
        })
    }

    pub fn n_mels(&self) -> usize {
        self.n_mels
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn row(&self, m: usize) -> &[S] {
        &self.weights[m * self.n_bins..(m + 1) * self.n_bins]
    }

    pub fn centers_hz(&self) -> &[f64] {
        &self.centers_hz
    }

    /// Filterbank response of one magnitude frame.
    pub fn apply(&self, magnitudes: &[S], out: &mut [S]) {
        for (m, o) in out.iter_mut().enumerate().take(self.n_mels) {
            let (a, b) = self.support[m];
            let row = &self.weights[m * self.n_bins..];
            *o = (a..b).fold(S::zero(), |acc, k| acc + row[k] * magnitudes[k]);
        }
    }
}

/// Hann-windowed magnitude STFT → Slaney mel filterbank → `log10`,
/// clamped at the configured floor.
pub fn mel_spectrogram<S: Real>(
    wave: &Waveform<S>,
    config: &SignalConfig,
) -> Result<MelSpectrogram<S>> {
    config.validate()?;
    if wave.sample_rate() != config.sample_rate {
        return Err(DspError::RateMismatch {
            expected: config.sample_rate,
            got: wave.sample_rate(),
        });
    }
    if wave.len() < config.min_samples() {
        return Err(DspError::TooShort {
            len: wave.len(),
            needed: config.min_samples(),
        });
    }
    let plan = StftPlan::<S>::new(config)?;
    let fb = MelFilterbank::<S>::new(config)?;
    mel_with(&plan, &fb, wave.samples(), config)
}

pub(crate) fn mel_with<S: Real>(
    plan: &StftPlan<S>,
    fb: &MelFilterbank<S>,
    samples: &[S],
    config: &SignalConfig,
) -> Result<MelSpectrogram<S>> {
    let spec = plan.forward(samples)?;
    let floor = S::lit(config.log_floor());
    let floor_amp = S::lit(10f64.powf(config.log_floor()));
    let mut values = vec![S::zero(); spec.n_frames * fb.n_mels()];
    let mut mags = vec![S::zero(); spec.n_bins];
    for t in 0..spec.n_frames {
        for (m, c) in mags.iter_mut().zip(spec.frame(t)) {
            *m = c.norm();
        }
        let out = &mut values[t * fb.n_mels()..(t + 1) * fb.n_mels()];
        fb.apply(&mags, out);
        for v in out.iter_mut() {
            *v = if *v > floor_amp { v.log10() } else { floor };
        }
    }
    MelSpectrogram::from_values(values, spec.n_frames, config.clone())
}
