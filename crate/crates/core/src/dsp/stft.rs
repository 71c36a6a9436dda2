use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{DspError, Result, SignalConfig};
use crate::scalar::Real;

/// One-sided complex spectrogram, `n_frames × n_bins`, row-major by frame.
#[derive(Clone, Debug)]
pub struct Spectrogram<S> {
    pub bins: Vec<Complex<S>>,
    pub n_frames: usize,
    pub n_bins: usize,
}

impl<S: Real> Spectrogram<S> {
    pub fn frame(&self, t: usize) -> &[Complex<S>] {
        &self.bins[t * self.n_bins..(t + 1) * self.n_bins]
    }

    pub fn magnitudes(&self) -> Vec<S> {
        self.bins.iter().map(|c| c.norm()).collect()
    }
}

/// Precomputed window and FFT plans for one [`SignalConfig`].
///
/// Framing reflect-pads by `fft_size / 2` on both sides so frame `i` is
/// centred on input sample `i · hop`.
pub struct StftPlan<S: Real> {
    hop: usize,
    fft_size: usize,
    min_len: usize,
    window: Vec<S>,
    forward: Arc<dyn Fft<S>>,
    inverse: Arc<dyn Fft<S>>,
}

impl<S: Real> StftPlan<S> {
    pub fn new(config: &SignalConfig) -> Result<Self> {
        config.validate()?;
        let mut planner = FftPlanner::new();
        Ok(Self {
            hop: config.hop,
            fft_size: config.fft_size,
            min_len: config.min_samples(),
            window: hann_window(config.window, config.fft_size),
            forward: planner.plan_fft_forward(config.fft_size),
            inverse: planner.plan_fft_inverse(config.fft_size),
        })
    }

    pub fn n_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn window(&self) -> &[S] {
        &self.window
    }

    fn pad(&self) -> usize {
        self.fft_size / 2
    }

    pub fn forward(&self, signal: &[S]) -> Result<Spectrogram<S>> {
        let pad = self.pad();
        let min = self.min_len;
        if signal.len() < min {
            return Err(DspError::TooShort {
                len: signal.len(),
                needed: min,
            });
        }
        let len = signal.len() as isize;
        let reflect = |j: isize| -> S {
            let mut p = j;
            if p < 0 {
                p = -p;
            }
            if p >= len {
                p = 2 * (len - 1) - p;
            }
            signal[p as usize]
        };

        let n_frames = signal.len().div_ceil(self.hop);
        let n_bins = self.n_bins();
        let mut bins = Vec::with_capacity(n_frames * n_bins);
        let mut buf = vec![Complex::new(S::zero(), S::zero()); self.fft_size];
        let mut scratch =
            vec![Complex::new(S::zero(), S::zero()); self.forward.get_inplace_scratch_len()];
        for t in 0..n_frames {
            let start = (t * self.hop) as isize - pad as isize;
            for (n, slot) in buf.iter_mut().enumerate() {
                let w = self.window[n];
                let x = if w == S::zero() {
                    S::zero()
                } else {
                    reflect(start + n as isize)
                };
                *slot = Complex::new(x * w, S::zero());
            }
            self.forward.process_with_scratch(&mut buf, &mut scratch);
            bins.extend_from_slice(&buf[..n_bins]);
        }
        Ok(Spectrogram {
            bins,
            n_frames,
            n_bins,
        })
    }

    /// Least-squares overlap-add inverse. Returns `n_frames · hop` samples,
    /// the longest signal whose forward transform has `n_frames` frames.
    pub fn inverse(&self, spec: &Spectrogram<S>) -> Vec<S> {
        let pad = self.pad();
        let n = self.fft_size;
        let out_len = spec.n_frames * self.hop;
        let padded_len = (spec.n_frames.saturating_sub(1)) * self.hop + n;
        let mut acc = vec![S::zero(); padded_len.max(out_len + pad)];
        let mut wsum = vec![S::zero(); acc.len()];
        let mut buf = vec![Complex::new(S::zero(), S::zero()); n];
        let mut scratch =
            vec![Complex::new(S::zero(), S::zero()); self.inverse.get_inplace_scratch_len()];
        let scale = S::one() / S::from_usize_lossy(n);
        for t in 0..spec.n_frames {
            let frame = spec.frame(t);
            buf[..spec.n_bins].copy_from_slice(frame);
            for k in spec.n_bins..n {
                buf[k] = frame[n - k].conj();
            }
            // DC and Nyquist must be real for a real inverse
            buf[0].im = S::zero();
            if n % 2 == 0 {
                buf[n / 2].im = S::zero();
            }
            self.inverse.process_with_scratch(&mut buf, &mut scratch);
            let start = t * self.hop;
            for (i, c) in buf.iter().enumerate() {
                let w = self.window[i];
                acc[start + i] = acc[start + i] + c.re * scale * w;
                wsum[start + i] = wsum[start + i] + w * w;
            }
        }
        let eps = S::lit(1e-8);
        (0..out_len)
            .map(|i| {
                let p = i + pad;
                if wsum[p] > eps {
                    acc[p] / wsum[p]
                } else {
                    S::zero()
                }
            })
            .collect()
    }
}

/// Periodic Hann of length `win_len`, zero-padded and centred in `fft_size`.
fn hann_window<S: Real>(win_len: usize, fft_size: usize) -> Vec<S> {
    let mut w = vec![S::zero(); fft_size];
    let offset = (fft_size - win_len) / 2;
    let two_pi = S::TAU();
    let len = S::from_usize_lossy(win_len);
    let half = S::lit(0.5);
    for i in 0..win_len {
        let phase = two_pi * S::from_usize_lossy(i) / len;
        w[offset + i] = half - half * phase.cos();
    }
    w
}
