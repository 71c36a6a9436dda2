use beatmix::codec::{load_codec, save_codec, CodecError, LatentCodec, PcaCodec};
use beatmix::dsp::{mel_spectrogram, MelSpectrogram, SignalConfig};
use beatmix::synth::ClickTrack;
use proptest::prelude::*;

fn clip_mel(bpm: f64, drone: f64, seed: u64) -> MelSpectrogram<f64> {
    let track = ClickTrack {
        bpm,
        seconds: 10.24,
        drone: Some((drone, 0.2)),
        bass_phase: Some((seed % 4) as usize),
        noise_db: Some(-30.0),
        seed,
        ..ClickTrack::default()
    };
    mel_spectrogram(&track.render(), &SignalConfig::default()).unwrap()
}

fn corpus() -> Vec<MelSpectrogram<f64>> {
    [(96.0, 220.0), (118.0, 330.0), (121.0, 440.0), (140.0, 150.0)]
        .iter()
        .enumerate()
        .map(|(i, &(bpm, hz))| clip_mel(bpm, hz, i as u64))
        .collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn sq_err(a: &MelSpectrogram<f64>, b: &MelSpectrogram<f64>) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Smooth random field well above the floor.
fn field(n_frames: usize, coeffs: &[f64]) -> MelSpectrogram<f64> {
    let cfg = SignalConfig::default();
    let values = (0..n_frames * cfg.n_mels)
        .map(|i| {
            let (t, m) = ((i / cfg.n_mels) as f64, (i % cfg.n_mels) as f64);
            let mut v = -1.0;
            for (k, c) in coeffs.iter().enumerate() {
                let k = k as f64 + 1.0;
                v += c * (0.07 * k * t + 0.11 * k * m + k).sin();
            }
            v
        })
        .collect();
    MelSpectrogram::from_values(values, n_frames, cfg).unwrap()
}

#[test]
fn default_clip_has_16x128x16_latent() {
    let mels = corpus();
    let codec = PcaCodec::fit(&mels, 16, 8).unwrap();
    let z = codec.encode(&mels[0]).unwrap();
    assert_eq!((mels[0].n_frames(), mels[0].n_mels()), (1024, 128));
    assert_eq!(z.shape(), (16, 128, 16));
}

#[test]
fn complete_basis_is_lossless() {
    let mels = corpus();
    let codec = PcaCodec::fit(&mels, 64, 8).unwrap();
    for m in &mels {
        let r = codec.reconstruct(m).unwrap();
        assert!(max_abs_diff(m.values(), r.values()) < 1e-5);
    }
}

#[test]
fn error_shrinks_with_channels() {
    let mels = corpus();
    let mut last = f64::INFINITY;
    for c in [4, 8, 16, 32] {
        let codec = PcaCodec::fit(&mels, c, 8).unwrap();
        let err: f64 = mels
            .iter()
            .map(|m| sq_err(m, &codec.reconstruct(m).unwrap()))
            .sum();
        assert!(err <= last, "C={c}: {err} > {last}");
        last = err;
    }
}

#[test]
fn constant_corpus_reconstructs_exactly_with_one_channel() {
    let cfg = SignalConfig::default();
    let m = MelSpectrogram::<f64>::filled(-1.25, 64, cfg).unwrap();
    let codec = PcaCodec::fit([&m, &m], 1, 8).unwrap();
    assert_eq!(sq_err(&m, &codec.reconstruct(&m).unwrap()), 0.0);
}

#[test]
fn basis_is_orthonormal_after_reload() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("codec.bin");
    let codec = PcaCodec::fit(&corpus(), 16, 8).unwrap();
    save_codec(&codec, &path).unwrap();
    let loaded = load_codec(&path).unwrap();
    assert_eq!(loaded.basis(), codec.basis());
    assert_eq!(loaded.mean(), codec.mean());
    assert_eq!(loaded.codec_id(), codec.codec_id());
    for i in 0..16 {
        for j in 0..16 {
            let dot: f64 = loaded
                .basis_row(i)
                .iter()
                .zip(loaded.basis_row(j))
                .map(|(&a, &b)| f64::from(a) * f64::from(b))
                .sum();
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((dot - want).abs() < 1e-6, "({i},{j}) {dot}");
        }
    }
    let m = &corpus()[1];
    assert_eq!(loaded.encode(m).unwrap(), codec.encode(m).unwrap());
}

#[test]
fn save_is_byte_stable_and_tamper_evident() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("codec.bin");
    let codec = PcaCodec::fit(&corpus()[..2], 8, 8).unwrap();
    save_codec(&codec, &path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(bytes, load_codec(&path).unwrap().to_bytes());

    let mut tampered = bytes.clone();
    let last = tampered.len() - 3;
    tampered[last] ^= 0x40;
    assert!(matches!(
        PcaCodec::from_bytes(&tampered),
        Err(CodecError::HashMismatch { .. })
    ));
    assert!(matches!(
        PcaCodec::from_bytes(&bytes[..bytes.len() - 4]),
        Err(CodecError::SchemaError(_))
    ));
    let mut bad_magic = bytes;
    bad_magic[0] = b'X';
    assert!(matches!(
        PcaCodec::from_bytes(&bad_magic),
        Err(CodecError::SchemaError(_))
    ));
}

#[test]
fn latents_from_another_codec_are_rejected() {
    let mels = corpus();
    let a = PcaCodec::fit(&mels[..2], 8, 8).unwrap();
    let b = PcaCodec::fit(&mels[2..], 8, 8).unwrap();
    let z = a.encode(&mels[0]).unwrap();
    assert!(matches!(
        b.decode(&z, &SignalConfig::default()),
        Err(CodecError::CodecMismatch { .. })
    ));
}

#[test]
fn zero_latent_decodes_to_tiled_mean() {
    let codec = PcaCodec::fit(&corpus(), 16, 8).unwrap();
    let z = beatmix::codec::LatentTensor::<f64>::zeros((16, 4, 16), codec.codec_id());
    let mel = codec.decode(&z, &SignalConfig::default()).unwrap();
    for t in 0..32 {
        for m in 0..128 {
            assert_eq!(mel.get(t, m), f64::from(codec.mean()[(t % 8) * 8 + m % 8]));
        }
    }
}

fn shared_codec() -> &'static PcaCodec {
    static CODEC: std::sync::OnceLock<PcaCodec> = std::sync::OnceLock::new();
    CODEC.get_or_init(|| PcaCodec::fit(&corpus(), 16, 8).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn encode_decode_is_idempotent(coeffs in prop::collection::vec(-0.4f64..0.4, 1..6)) {
        let codec = shared_codec();
        let m = field(64, &coeffs);
        let z = codec.encode(&m).unwrap();
        let z2 = codec.encode(&codec.decode(&z, m.config()).unwrap()).unwrap();
        prop_assert!(max_abs_diff(z.values(), z2.values()) < 1e-5);
    }

    #[test]
    fn encode_is_affine_in_mixtures(
        a in prop::collection::vec(-0.4f64..0.4, 1..6),
        b in prop::collection::vec(-0.4f64..0.4, 1..6),
        lambda in 0.0f64..1.0,
    ) {
        let codec = shared_codec();
        let (m1, m2) = (field(64, &a), field(64, &b));
        let mixed: Vec<f64> = m1.values().iter().zip(m2.values())
            .map(|(x, y)| lambda * x + (1.0 - lambda) * y)
            .collect();
        let mm = MelSpectrogram::from_values(mixed, 64, SignalConfig::default()).unwrap();
        let (z1, z2) = (codec.encode(&m1).unwrap(), codec.encode(&m2).unwrap());
        let want: Vec<f64> = z1.values().iter().zip(z2.values())
            .map(|(x, y)| lambda * x + (1.0 - lambda) * y)
            .collect();
        prop_assert!(max_abs_diff(codec.encode(&mm).unwrap().values(), &want) < 1e-5);
    }

    #[test]
    fn projection_is_a_contraction(coeffs in prop::collection::vec(-0.4f64..0.4, 1..6)) {
        let codec = shared_codec();
        let m = field(64, &coeffs);
        let r = codec.reconstruct(&m).unwrap();
        let centred = |x: &MelSpectrogram<f64>| -> f64 {
            (0..64).flat_map(|t| (0..128).map(move |f| (t, f)))
                .map(|(t, f)| (x.get(t, f) - f64::from(codec.mean()[(t % 8) * 8 + f % 8])).powi(2))
                .sum::<f64>()
                .sqrt()
        };
        prop_assert!(centred(&r) <= centred(&m) + 1e-9);
    }
}
