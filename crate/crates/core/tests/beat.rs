use beatmix::beat::{
    analyze_waveform, estimate_tempo, infer_downbeats, onset_envelope, track_beats, BeatConfig,
    BeatError, BeatGrid, BeatSource,
};
use beatmix::dsp::{mel_spectrogram, SignalConfig, Waveform};
use beatmix::synth::ClickTrack;
use proptest::prelude::*;

fn hit_fraction(beats: &[f64], clicks: &[f64], tol: f64) -> f64 {
    let inner = &beats[1..beats.len() - 1];
    let hits = inner
        .iter()
        .filter(|&&b| clicks.iter().any(|&c| (c - b).abs() <= tol))
        .count();
    hits as f64 / inner.len() as f64
}

fn analyze(track: &ClickTrack) -> BeatGrid {
    analyze_waveform(&track.render(), &SignalConfig::default(), &BeatConfig::default()).unwrap()
}

#[test]
fn click_train_envelope_peaks_every_half_second() {
    let cfg = SignalConfig::default();
    let track = ClickTrack {
        bpm: 120.0,
        seconds: 6.0,
        ..ClickTrack::default()
    };
    let mel = mel_spectrogram(&track.render(), &cfg).unwrap();
    let env = onset_envelope(&mel);
    let peaks: Vec<usize> = (1..env.len() - 1)
        .filter(|&t| env[t] > 0.5 && env[t] >= env[t - 1] && env[t] > env[t + 1])
        .collect();
    assert!(peaks.len() >= 10, "{peaks:?}");
    for w in peaks.windows(2) {
        let spacing = w[1] as i64 - w[0] as i64;
        assert!((spacing - 50).abs() <= 1, "{peaks:?}");
    }
}

#[test]
fn tempo_of_click_tracks() {
    let cfg = SignalConfig::default();
    for bpm in [90.0, 120.0] {
        let track = ClickTrack {
            bpm,
            ..ClickTrack::default()
        };
        let env = onset_envelope(&mel_spectrogram(&track.render(), &cfg).unwrap());
        let got = estimate_tempo(&env, &cfg, &BeatConfig::default()).unwrap();
        assert!((got - bpm).abs() <= 2.0, "{bpm}: {got}");
    }
}

#[test]
fn silence_has_no_onsets() {
    let cfg = SignalConfig::default();
    let mel = mel_spectrogram(&Waveform::<f64>::silence(16_000 * 6, 16_000), &cfg).unwrap();
    let env = onset_envelope(&mel);
    assert!(matches!(
        estimate_tempo(&env, &cfg, &BeatConfig::default()),
        Err(BeatError::NoOnsets)
    ));
}

#[test]
fn beats_land_on_clicks() {
    let track = ClickTrack::default();
    let grid = analyze(&track);
    let frac = hit_fraction(&grid.beat_times, &track.click_times(), 0.020);
    assert_eq!(frac, 1.0, "{:?}", grid.beat_times);
}

#[test]
fn missing_click_still_gets_a_beat() {
    let track = ClickTrack {
        missing: vec![10],
        ..ClickTrack::default()
    };
    let gap = track.click_times()[10];
    let grid = analyze(&track);
    assert!(
        grid.beat_times.iter().any(|&b| (b - gap).abs() < 0.05),
        "no beat near {gap}: {:?}",
        grid.beat_times
    );
}

#[test]
fn flat_tone_beats_are_evenly_spaced() {
    let cfg = SignalConfig::default();
    let sr = 16_000.0;
    let x: Vec<f64> = (0..16_000 * 8)
        .map(|n| 0.5 * (std::f64::consts::TAU * 523.0 * n as f64 / sr).sin())
        .collect();
    let mel = mel_spectrogram(&Waveform::new(x, 16_000).unwrap(), &cfg).unwrap();
    let env = onset_envelope(&mel);
    let beats = track_beats(&env, 100.0, &cfg, &BeatConfig::default()).unwrap();
    let tau = 0.6;
    assert!(beats.len() > 5);
    for w in beats.windows(2) {
        let d = w[1] - w[0];
        assert!((d - tau).abs() <= 0.1 * tau, "{beats:?}");
    }
}

#[test]
fn bass_phase_selects_downbeats() {
    for phase in [0usize, 2] {
        let track = ClickTrack {
            bass_phase: Some(phase),
            ..ClickTrack::default()
        };
        let clicks = track.click_times();
        let wave = track.render();
        let cfg = SignalConfig::default();
        let mel = mel_spectrogram(&wave, &cfg).unwrap();
        // the built-in tracker drives the beat list
        let grid = analyze_waveform(&wave, &cfg, &BeatConfig::default()).unwrap();
        let first = grid.downbeat_times[0];
        let idx = clicks
            .iter()
            .position(|&c| (c - first).abs() < 0.02)
            .expect("downbeat on a click");
        assert_eq!(idx % 4, phase, "phase {phase}: {:?}", grid.downbeat_times);

        // and directly on the nominal click times
        let downs = infer_downbeats(&clicks, &mel, &BeatConfig::default()).unwrap();
        let want: Vec<f64> = clicks.iter().skip(phase).step_by(4).copied().collect();
        assert_eq!(downs, want);
    }
}

#[test]
fn analysis_is_deterministic() {
    let track = ClickTrack {
        bpm: 97.0,
        noise_db: Some(-20.0),
        seed: 3,
        ..ClickTrack::default()
    };
    assert_eq!(analyze(&track), analyze(&track));
}

#[test]
fn calibration_grid_holds() {
    for bpm in [70.0, 90.0, 120.0, 150.0] {
        for noise in [None, Some(-20.0)] {
            let track = ClickTrack {
                bpm,
                seconds: 16.0,
                noise_db: noise,
                bass_phase: Some(0),
                seed: bpm as u64,
                ..ClickTrack::default()
            };
            let grid = analyze(&track);
            assert_eq!(grid.source, BeatSource::Builtin);
            assert!((grid.tempo_bpm - bpm).abs() <= 2.0, "{bpm} {noise:?}: {}", grid.tempo_bpm);
            let frac = hit_fraction(&grid.beat_times, &track.click_times(), 0.020);
            assert!(frac >= 0.9, "{bpm} {noise:?}: {frac}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn beats_ascend_and_stay_inside_audio(bpm in 60.0f64..180.0, seconds in 5.0f64..10.0, seed in 0u64..1000) {
        let track = ClickTrack { bpm, seconds, noise_db: Some(-30.0), seed, ..ClickTrack::default() };
        let wave = track.render();
        let cfg = SignalConfig::default();
        let env = onset_envelope(&mel_spectrogram(&wave, &cfg).unwrap());
        let beats = track_beats(&env, bpm, &cfg, &BeatConfig::default()).unwrap();
        prop_assert!(beats.windows(2).all(|w| w[1] > w[0]));
        prop_assert!(beats.iter().all(|&b| b >= 0.0 && b <= wave.duration_seconds()));
    }
}
