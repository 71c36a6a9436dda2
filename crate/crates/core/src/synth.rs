//! Deterministic synthetic test material: click tracks with optional bass
//! pulses on bar lines and additive white noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dsp::Waveform;

#[derive(Clone, Debug)]
pub struct ClickTrack {
    pub bpm: f64,
    pub seconds: f64,
    pub sample_rate: u32,
    /// Time of the first click.
    pub offset_seconds: f64,
    pub click_amplitude: f64,
    /// Bass pulse on every fourth click starting at this click index.
    pub bass_phase: Option<usize>,
    pub bass_amplitude: f64,
    /// White-noise RMS in dB relative to full scale.
    pub noise_db: Option<f64>,
    /// Click indices to leave out.
    pub missing: Vec<usize>,
    /// Sustained sine added under the clicks (Hz, amplitude).
    pub drone: Option<(f64, f64)>,
    pub seed: u64,
}

impl Default for ClickTrack {
    fn default() -> Self {
        Self {
            bpm: 120.0,
            seconds: 12.0,
            sample_rate: 16_000,
            offset_seconds: 0.25,
            click_amplitude: 0.8,
            bass_phase: None,
            bass_amplitude: 0.6,
            noise_db: None,
            missing: Vec::new(),
            drone: None,
            seed: 0,
        }
    }
}

impl ClickTrack {
    /// Nominal click times (including any left out), in seconds.
    pub fn click_times(&self) -> Vec<f64> {
        let period = 60.0 / self.bpm;
        let mut times = Vec::new();
        let mut t = self.offset_seconds;
        while t < self.seconds {
            times.push(t);
            t = self.offset_seconds + period * times.len() as f64;
        }
        times
    }

    pub fn render(&self) -> Waveform<f64> {
        let sr = f64::from(self.sample_rate);
        let len = (self.seconds * sr).round() as usize;
        let mut x = vec![0.0f64; len];
        let tau = std::f64::consts::TAU;

        if let Some((freq, amp)) = self.drone {
            for (n, v) in x.iter_mut().enumerate() {
                *v += amp * (tau * freq * n as f64 / sr).sin();
            }
        }
        let click_len = (0.03 * sr) as usize;
        let bass_len = (0.15 * sr) as usize;
        for (i, &t) in self.click_times().iter().enumerate() {
            if self.missing.contains(&i) {
                continue;
            }
            let start = (t * sr).round() as usize;
            for k in 0..click_len.min(len.saturating_sub(start)) {
                let tt = k as f64 / sr;
                let env = (-tt / 0.005).exp();
                let tone = (tau * 1500.0 * tt).sin() + 0.5 * (tau * 3100.0 * tt).sin();
                x[start + k] += self.click_amplitude * env * tone / 1.5;
            }
            let on_bar = self
                .bass_phase
                .is_some_and(|p| i >= p && (i - p) % 4 == 0);
            if on_bar {
                for k in 0..bass_len.min(len.saturating_sub(start)) {
                    let tt = k as f64 / sr;
                    let env = (-tt / 0.06).exp();
                    x[start + k] += self.bass_amplitude * env * (tau * 60.0 * tt).sin();
                }
            }
        }
        if let Some(db) = self.noise_db {
            let rms = 10f64.powf(db / 20.0);
            let normal = Normal::new(0.0, rms).expect("finite noise level");
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            for v in &mut x {
                *v += normal.sample(&mut rng);
            }
        }
        for v in &mut x {
            *v = v.clamp(-1.0, 1.0);
        }
        Waveform::new(x, self.sample_rate).expect("synthetic samples are finite")
    }
}
