use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex;

use super::mel::MelFilterbank;
use super::{DspError, MelSpectrogram, Result, Spectrogram, StftPlan, Waveform};
use crate::linalg::{pinv_symmetric, SquareMatrix};
use crate::scalar::Real;

/// Starting phase for the Griffin-Lim iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PhaseInit {
    /// All-zero phase; fully deterministic and converges fastest on tonal input.
    #[default]
    Zero,
    Random(u64),
}

#[derive(Clone, Debug)]
pub struct GriffinLimOutput<S> {
    pub signal: Vec<S>,
    /// `‖|STFT(x_k)| − target‖_F / ‖target‖_F` after each iteration `k ≥ 1`.
    pub spectral_error: Vec<S>,
}

/// Mel-to-waveform inverter: clamped pseudo-inverse of the filterbank for
/// magnitudes, Griffin-Lim for phase.
pub struct GriffinLim<S: Real> {
    plan: StftPlan<S>,
    /// `n_bins × n_mels`, row-major
    pinv: Vec<S>,
    n_mels: usize,
    n_bins: usize,
}

impl<S: Real> GriffinLim<S> {
    pub fn new(config: &super::SignalConfig) -> Result<Self> {
        let plan = StftPlan::new(config)?;
        let fb = MelFilterbank::<S>::new(config)?;
        let (n_mels, n_bins) = (fb.n_mels(), fb.n_bins());

        // pinv(M) = Mᵀ (M Mᵀ)⁺
        let mut gram = SquareMatrix::zeros(n_mels);
        for i in 0..n_mels {
            for j in i..n_mels {
                let v = crate::scalar::dot(fb.row(i), fb.row(j));
                gram.set(i, j, v);
                gram.set(j, i, v);
            }
        }
        let gram_inv = pinv_symmetric(&gram, S::lit(1e-10));
        let mut pinv = vec![S::zero(); n_bins * n_mels];
        for k in 0..n_bins {
            for j in 0..n_mels {
                let mut acc = S::zero();
                for i in 0..n_mels {
                    acc = acc + fb.row(i)[k] * gram_inv.get(i, j);
                }
                pinv[k * n_mels + j] = acc;
            }
        }
        Ok(Self {
            plan,
            pinv,
            n_mels,
            n_bins,
        })
    }

    /// Linear STFT magnitudes (`T × n_bins`) for a log-mel matrix. Entries at
    /// the floor are treated as zero amplitude.
    pub fn linear_magnitudes(&self, mel: &MelSpectrogram<S>) -> Result<Vec<S>> {
        if mel.n_mels() != self.n_mels {
            return Err(DspError::InvalidInput(format!(
                "mel has {} bins, inverter expects {}",
                mel.n_mels(),
                self.n_mels
            )));
        }
        let floor = mel.floor();
        let ten = S::lit(10.0);
        let mut amps = vec![S::zero(); self.n_mels];
        let mut out = vec![S::zero(); mel.n_frames() * self.n_bins];
        for t in 0..mel.n_frames() {
            for (a, &v) in amps.iter_mut().zip(mel.frame(t)) {
                *a = if v <= floor { S::zero() } else { ten.powf(v) };
            }
            let dst = &mut out[t * self.n_bins..(t + 1) * self.n_bins];
            for (k, d) in dst.iter_mut().enumerate() {
                let row = &self.pinv[k * self.n_mels..(k + 1) * self.n_mels];
                *d = crate::scalar::dot(row, &amps).max(S::zero());
            }
        }
        Ok(out)
    }

    /// Phase retrieval for a `n_frames × n_bins` magnitude matrix.
    pub fn reconstruct(
        &self,
        magnitudes: &[S],
        n_frames: usize,
        iterations: usize,
        init: PhaseInit,
    ) -> Result<GriffinLimOutput<S>> {
        if iterations == 0 {
            return Err(DspError::InvalidInput("iterations must be at least 1".into()));
        }
        if magnitudes.len() != n_frames * self.n_bins {
            return Err(DspError::InvalidInput("magnitude matrix has wrong shape".into()));
        }
        let target_norm = magnitudes
            .iter()
            .fold(S::zero(), |acc, &m| acc + m * m)
            .sqrt();
        let mut spec = Spectrogram {
            bins: match init {
                PhaseInit::Zero => magnitudes.iter().map(|&m| Complex::new(m, S::zero())).collect(),
                PhaseInit::Random(seed) => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let tau = S::TAU();
                    magnitudes
                        .iter()
                        .map(|&m| Complex::from_polar(m, tau * S::lit(rng.random::<f64>())))
                        .collect()
                }
            },
            n_frames,
            n_bins: self.n_bins,
        };

        let relative = |err: S| {
            if target_norm > S::zero() {
                err.sqrt() / target_norm
            } else {
                S::zero()
            }
        };
        // errors[k] describes the signal after k projections
        let mut errors = Vec::with_capacity(iterations + 1);
        let mut signal = self.plan.inverse(&spec);
        for k in 0..=iterations {
            // signal is n_frames·hop long, so the rebuilt spectrogram has n_frames frames
            let rebuilt = self.plan.forward(&signal)?;
            let mut err = S::zero();
            for ((slot, &target), c) in spec.bins.iter_mut().zip(magnitudes).zip(&rebuilt.bins) {
                let mag = c.norm();
                let diff = mag - target;
                err = err + diff * diff;
                *slot = if mag > S::tiny() {
                    *c * (target / mag)
                } else {
                    Complex::new(target, S::zero())
                };
            }
            errors.push(relative(err));
            if k < iterations {
                signal = self.plan.inverse(&spec);
            }
        }
        errors.remove(0);
        let spectral_error = errors;
        Ok(GriffinLimOutput {
            signal,
            spectral_error,
        })
    }

    pub fn invert(
        &self,
        mel: &MelSpectrogram<S>,
        iterations: usize,
        init: PhaseInit,
    ) -> Result<GriffinLimOutput<S>> {
        let mags = self.linear_magnitudes(mel)?;
        self.reconstruct(&mags, mel.n_frames(), iterations, init)
    }
}

/// Mel → waveform, zero initial phase. The result is `n_frames · hop`
/// samples long.
pub fn invert_mel<S: Real>(mel: &MelSpectrogram<S>, iterations: usize) -> Result<Waveform<S>> {
    let gl = GriffinLim::new(mel.config())?;
    let out = gl.invert(mel, iterations, PhaseInit::Zero)?;
    Waveform::new(out.signal, mel.config().sample_rate)
}
