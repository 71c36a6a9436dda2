use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{CodecError, LatentCodec, LatentTensor, Result};
use crate::dsp::{MelSpectrogram, SignalConfig};
use crate::linalg::{symmetric_eigen, SquareMatrix};
use crate::scalar::Real;

/// Summary of a fit, in log10-amplitude units squared.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitStats {
    pub patches: u64,
    pub total_variance: f64,
    pub retained_variance: f64,
    /// Mean squared per-entry residual over the training patches.
    pub residual_mse: f64,
}

/// Running first and second moments of flattened `P × P` patches.
///
/// Accumulators built over disjoint shards can be combined with
/// [`PatchCovariance::merge`] in any grouping.
#[derive(Clone, Debug)]
pub struct PatchCovariance {
    patch: usize,
    count: u64,
    sum: Vec<f64>,
    outer: Vec<f64>,
    // fingerprints of distinct patches, capped at P² entries
    distinct: BTreeSet<u64>,
}

impl PatchCovariance {
    pub fn new(patch: usize) -> Self {
        let d = patch * patch;
        Self {
            patch,
            count: 0,
            sum: vec![0.0; d],
            outer: vec![0.0; d * d],
            distinct: BTreeSet::new(),
        }
    }

    pub fn patch_size(&self) -> usize {
        self.patch
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Number of distinct patches seen, saturating at `P²`.
    pub fn distinct_patches(&self) -> usize {
        self.distinct.len()
    }

    pub fn add<S: Real>(&mut self, mel: &MelSpectrogram<S>) -> Result<()> {
        let p = self.patch;
        let (t, f) = (mel.n_frames(), mel.n_mels());
        if p == 0 || t % p != 0 || f % p != 0 {
            return Err(CodecError::NonDivisibleShape { t, f, p });
        }
        let d = p * p;
        let mut x = vec![0.0f64; d];
        for ti in 0..t / p {
            for fi in 0..f / p {
                gather_patch(mel.values(), f, p, ti, fi, |k, v| x[k] = v.as_f64());
                self.add_patch(&x);
            }
        }
        debug_assert_eq!(x.len(), d);
        Ok(())
    }

    fn add_patch(&mut self, x: &[f64]) {
        let d = x.len();
        self.count += 1;
        for i in 0..d {
            self.sum[i] += x[i];
            let row = &mut self.outer[i * d..(i + 1) * d];
            for j in i..d {
                row[j] += x[i] * x[j];
            }
        }
        if self.distinct.len() < d {
            self.distinct.insert(fingerprint(x));
        }
    }

    pub fn merge(&mut self, other: &Self) {
        assert_eq!(self.patch, other.patch, "merging accumulators of different patch size");
        self.count += other.count;
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.outer.iter_mut().zip(&other.outer) {
            *a += b;
        }
        let cap = self.patch * self.patch;
        for &h in &other.distinct {
            if self.distinct.len() >= cap {
                break;
            }
            self.distinct.insert(h);
        }
    }

    pub fn mean(&self) -> Vec<f64> {
        let n = self.count.max(1) as f64;
        self.sum.iter().map(|s| s / n).collect()
    }

    /// Population covariance of the patches.
    pub fn covariance(&self) -> SquareMatrix<f64> {
        let d = self.patch * self.patch;
        let n = self.count.max(1) as f64;
        let mean = self.mean();
        let mut cov = SquareMatrix::zeros(d);
        for i in 0..d {
            for j in i..d {
                let v = self.outer[i * d + j] / n - mean[i] * mean[j];
                cov.set(i, j, v);
                cov.set(j, i, v);
            }
        }
        cov
    }

    /// Keeps the top `channels` principal directions.
    pub fn finish(&self, channels: usize) -> Result<PcaCodec> {
        let p = self.patch;
        let d = p * p;
        if channels == 0 || channels > d {
            return Err(CodecError::InsufficientData(format!(
                "channel count {channels} must lie in 1..={d}"
            )));
        }
        if self.distinct.len() < channels {
            return Err(CodecError::InsufficientData(format!(
                "{} distinct patches available, {channels} required",
                self.distinct.len()
            )));
        }
        let eig = symmetric_eigen(&self.covariance());
        let mut basis = Vec::with_capacity(channels * d);
        for c in 0..channels {
            let mut v = eig.vector(c);
            let lead = v
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)))
                .map(|(_, &x)| x)
                .unwrap_or(1.0);
            if lead < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            basis.extend(v.iter().map(|&x| x as f32));
        }
        let mean: Vec<f32> = self.mean().iter().map(|&m| m as f32).collect();
        let total: f64 = eig.values.iter().map(|v| v.max(0.0)).sum();
        let retained: f64 = eig.values[..channels].iter().map(|v| v.max(0.0)).sum();
        let mut codec = PcaCodec::from_parts(p, channels, mean, basis)?;
        codec.fit_stats = Some(FitStats {
            patches: self.count,
            total_variance: total,
            retained_variance: retained,
            residual_mse: (total - retained).max(0.0) / d as f64,
        });
        Ok(codec)
    }
}

fn fingerprint(x: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in x {
        for b in v.to_bits().to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

#[inline]
fn gather_patch<S: Copy>(
    values: &[S],
    n_mels: usize,
    p: usize,
    ti: usize,
    fi: usize,
    mut put: impl FnMut(usize, S),
) {
    for dt in 0..p {
        let row = (ti * p + dt) * n_mels + fi * p;
        for df in 0..p {
            put(dt * p + df, values[row + df]);
        }
    }
}

/// Linear patch codec: each non-overlapping `P × P` patch is centred on the
/// corpus mean and projected onto `C` orthonormal principal directions.
#[derive(Clone, Debug, PartialEq)]
pub struct PcaCodec {
    patch: usize,
    channels: usize,
    mean: Vec<f32>,
    basis: Vec<f32>,
    codec_id: String,
    pub fit_stats: Option<FitStats>,
}

impl PcaCodec {
    /// Fits on every patch of `mels`, in order.
    pub fn fit<'a, S: Real>(
        mels: impl IntoIterator<Item = &'a MelSpectrogram<S>>,
        channels: usize,
        patch: usize,
    ) -> Result<Self> {
        let mut acc = PatchCovariance::new(patch);
        for mel in mels {
            acc.add(mel)?;
        }
        if acc.count() == 0 {
            return Err(CodecError::InsufficientData("empty corpus".into()));
        }
        acc.finish(channels)
    }

    /// `basis` is `channels × P²`, row-major.
    pub fn from_parts(patch: usize, channels: usize, mean: Vec<f32>, basis: Vec<f32>) -> Result<Self> {
        let d = patch * patch;
        if patch == 0 || channels == 0 || channels > d {
            return Err(CodecError::SchemaError(format!(
                "invalid codec geometry P={patch}, C={channels}"
            )));
        }
        if mean.len() != d || basis.len() != channels * d {
            return Err(CodecError::SchemaError(format!(
                "expected {d} mean and {} basis values, got {} and {}",
                channels * d,
                mean.len(),
                basis.len()
            )));
        }
        if mean.iter().chain(&basis).any(|v| !v.is_finite()) {
            return Err(CodecError::SchemaError("non-finite codec parameter".into()));
        }
        let codec_id = crate::io_util::sha256_hex(&parameter_bytes(&mean, &basis));
        Ok(Self {
            patch,
            channels,
            mean,
            basis,
            codec_id,
            fit_stats: None,
        })
    }

    pub fn mean(&self) -> &[f32] {
        &self.mean
    }

    pub fn basis(&self) -> &[f32] {
        &self.basis
    }

    pub fn basis_row(&self, c: usize) -> &[f32] {
        let d = self.patch * self.patch;
        &self.basis[c * d..(c + 1) * d]
    }

    /// `decode(encode(mel))` under the mel's own configuration.
    pub fn reconstruct<S: Real>(&self, mel: &MelSpectrogram<S>) -> Result<MelSpectrogram<S>> {
        self.decode(&self.encode(mel)?, mel.config())
    }
}

pub(super) fn parameter_bytes(mean: &[f32], basis: &[f32]) -> Vec<u8> {
    mean.iter()
        .chain(basis)
        .flat_map(|v| v.to_le_bytes())
        .collect()
}

impl LatentCodec for PcaCodec {
    fn codec_id(&self) -> &str {
        &self.codec_id
    }

    fn channels(&self) -> usize {
        self.channels
    }

    fn patch_size(&self) -> usize {
        self.patch
    }

    fn encode<S: Real>(&self, mel: &MelSpectrogram<S>) -> Result<LatentTensor<S>> {
        let shape = self.latent_shape(mel.n_frames(), mel.n_mels())?;
        let (c_n, nt, nf) = shape;
        let p = self.patch;
        let d = p * p;
        let mean: Vec<S> = self.mean.iter().map(|&v| S::lit(f64::from(v))).collect();
        let basis: Vec<S> = self.basis.iter().map(|&v| S::lit(f64::from(v))).collect();
        let mut out = vec![S::zero(); c_n * nt * nf];
        let mut x = vec![S::zero(); d];
        for ti in 0..nt {
            for fi in 0..nf {
                gather_patch(mel.values(), mel.n_mels(), p, ti, fi, |k, v| x[k] = v - mean[k]);
                for c in 0..c_n {
                    let row = &basis[c * d..(c + 1) * d];
                    let mut acc = S::zero();
                    for k in 0..d {
                        acc = acc + row[k] * x[k];
                    }
                    out[(c * nt + ti) * nf + fi] = acc;
                }
            }
        }
        LatentTensor::from_parts(out, shape, self.codec_id.clone())
    }

    fn decode<S: Real>(
        &self,
        latent: &LatentTensor<S>,
        config: &SignalConfig,
    ) -> Result<MelSpectrogram<S>> {
        if latent.codec_id() != self.codec_id {
            return Err(CodecError::CodecMismatch {
                expected: self.codec_id.clone(),
                got: latent.codec_id().to_string(),
            });
        }
        let (c_n, nt, nf) = latent.shape();
        let p = self.patch;
        if c_n != self.channels || nf * p != config.n_mels {
            return Err(CodecError::ShapeMismatch(format!(
                "latent {c_n}×{nt}×{nf} does not decode to {} mel bands with C={}, P={p}",
                config.n_mels, self.channels
            )));
        }
        let d = p * p;
        let n_mels = nf * p;
        let mean: Vec<S> = self.mean.iter().map(|&v| S::lit(f64::from(v))).collect();
        let basis: Vec<S> = self.basis.iter().map(|&v| S::lit(f64::from(v))).collect();
        let mut values = vec![S::zero(); nt * p * n_mels];
        let mut x = vec![S::zero(); d];
        for ti in 0..nt {
            for fi in 0..nf {
                x.copy_from_slice(&mean);
                for c in 0..c_n {
                    let coeff = latent.get(c, ti, fi);
                    let row = &basis[c * d..(c + 1) * d];
                    for k in 0..d {
                        x[k] = x[k] + coeff * row[k];
                    }
                }
                for dt in 0..p {
                    let base = (ti * p + dt) * n_mels + fi * p;
                    values[base..base + p].copy_from_slice(&x[dt * p..(dt + 1) * p]);
                }
            }
        }
        Ok(MelSpectrogram::from_values_clamped(values, nt * p, config.clone())?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp_mel(n_frames: usize, phase: f64) -> MelSpectrogram<f64> {
        let cfg = SignalConfig {
            n_mels: 16,
            ..SignalConfig::default()
        };
        let values = (0..n_frames * 16)
            .map(|i| {
                let (t, m) = ((i / 16) as f64, (i % 16) as f64);
                -1.5 + (0.3 * t + phase).sin() + 0.1 * m * (0.05 * t).cos()
            })
            .collect();
        MelSpectrogram::from_values(values, n_frames, cfg).unwrap()
    }

    #[test]
    fn merge_matches_single_pass() {
        let a = ramp_mel(32, 0.0);
        let b = ramp_mel(16, 1.0);
        let mut whole = PatchCovariance::new(8);
        whole.add(&a).unwrap();
        whole.add(&b).unwrap();
        let mut left = PatchCovariance::new(8);
        left.add(&a).unwrap();
        let mut right = PatchCovariance::new(8);
        right.add(&b).unwrap();
        left.merge(&right);
        assert_eq!(left.count(), whole.count());
        let (x, y) = (left.covariance(), whole.covariance());
        for (u, v) in x.as_slice().iter().zip(y.as_slice()) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn non_divisible_shape() {
        let mel = ramp_mel(30, 0.0);
        let err = PcaCodec::fit([&mel], 4, 8).unwrap_err();
        assert!(matches!(err, CodecError::NonDivisibleShape { t: 30, .. }));
    }

    #[test]
    fn too_few_distinct_patches() {
        let cfg = SignalConfig {
            n_mels: 16,
            ..SignalConfig::default()
        };
        let mel = MelSpectrogram::<f64>::filled(-1.0, 16, cfg).unwrap();
        assert!(matches!(
            PcaCodec::fit([&mel], 2, 8),
            Err(CodecError::InsufficientData(_))
        ));
        assert!(PcaCodec::fit([&mel], 1, 8).is_ok());
    }

    #[test]
    fn sign_convention_makes_largest_component_positive() {
        let codec = PcaCodec::fit([&ramp_mel(64, 0.3)], 6, 8).unwrap();
        for c in 0..6 {
            let row = codec.basis_row(c);
            let lead = row.iter().copied().max_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap();
            assert!(lead > 0.0);
        }
    }

    #[test]
    fn latent_of_mean_is_zero() {
        let codec = PcaCodec::fit([&ramp_mel(64, 0.3)], 4, 8).unwrap();
        let cfg = SignalConfig {
            n_mels: 16,
            ..SignalConfig::default()
        };
        let mut values = vec![0.0f64; 16 * 16];
        for t in 0..16 {
            for m in 0..16 {
                values[t * 16 + m] = f64::from(codec.mean()[(t % 8) * 8 + m % 8]);
            }
        }
        let mel = MelSpectrogram::from_values(values, 16, cfg).unwrap();
        let z = codec.encode(&mel).unwrap();
        assert!(z.values().iter().all(|&v| v == 0.0));
    }
}
