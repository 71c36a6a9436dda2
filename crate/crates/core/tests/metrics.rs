use std::collections::BTreeMap;

use beatmix::embed::{ClassPosterior, Embedding, EmbeddingSet, Modality, PosteriorSet};
use beatmix::metrics::{
    build_report, frechet_distance, inception_score, mean_text_audio_similarity,
    nearest_neighbors, nn_similarity_ratio, paired_kl, retrieval_max, text_audio_similarity,
    FdInput, MetricsError, MetricsReport, ReportInputs,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn unit(id: &str, v: Vec<f64>) -> Embedding<f64> {
    Embedding::new(id, Modality::Audio, v).unwrap().normalize().unwrap()
}

fn set_of(prefix: &str, rows: &[Vec<f64>]) -> EmbeddingSet<f64> {
    let mut s = EmbeddingSet::new(rows[0].len());
    for (i, r) in rows.iter().enumerate() {
        s.insert(Embedding::new(format!("{prefix}{i:05}"), Modality::Audio, r.clone()).unwrap())
            .unwrap();
    }
    s
}

fn gaussian_rows(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..dim).map(|_| StandardNormal.sample(rng)).collect())
        .collect()
}

#[test]
fn similarity_extremes() {
    let a = unit("a", vec![0.3, -0.2, 0.9]);
    let b = unit("b", vec![0.0, 1.0, 0.0]);
    let c = unit("c", vec![1.0, 0.0, 0.0]);
    let neg = unit("n", vec![-0.3, 0.2, -0.9]);
    assert!((text_audio_similarity(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(text_audio_similarity(&b, &c).unwrap(), 0.0);
    assert!((text_audio_similarity(&a, &neg).unwrap() + 1.0).abs() < 1e-12);
    let short = unit("s", vec![1.0, 0.0]);
    assert!(matches!(text_audio_similarity(&a, &short), Err(MetricsError::DimMismatch(3, 2))));
}

#[test]
fn mean_similarity_is_an_average() {
    let t = unit("t", vec![1.0, 0.0]);
    let a1 = unit("a1", vec![0.2, (1.0f64 - 0.04).sqrt()]);
    let a2 = unit("a2", vec![0.4, (1.0f64 - 0.16).sqrt()]);
    let m = mean_text_audio_similarity(&[(&t, &a1), (&t, &a2)]).unwrap();
    assert!((m - 0.3).abs() < 1e-12);
    assert!(matches!(
        mean_text_audio_similarity::<f64>(&[]),
        Err(MetricsError::EmptySet(_))
    ));
}

#[test]
fn retrieval_picks_the_best_match() {
    let text = set_of("t", &[vec![1.0, 0.0]]);
    let audio = set_of(
        "a",
        &[0.1f64, 0.7, 0.3].map(|c| vec![c, (1.0 - c * c).sqrt()]),
    );
    assert!((retrieval_max(&text, &audio).unwrap() - 0.7).abs() < 1e-12);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let rows = gaussian_rows(&mut rng, 20, 8);
    let same = set_of("x", &rows);
    assert!((retrieval_max(&same, &same).unwrap() - 1.0).abs() < 1e-12);
}

fn brute(queries: &[&[f64]], keys: &[&[f64]]) -> Vec<(usize, f64)> {
    queries
        .iter()
        .map(|q| {
            let mut best = (0, f64::NEG_INFINITY);
            for (j, k) in keys.iter().enumerate() {
                let mut s = 0.0;
                for i in 0..q.len() {
                    s += q[i] * k[i];
                }
                if s > best.1 {
                    best = (j, s);
                }
            }
            best
        })
        .collect()
}

#[test]
fn tiled_search_matches_double_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let q = set_of("q", &gaussian_rows(&mut rng, 100, 32));
    let k = set_of("k", &gaussian_rows(&mut rng, 1000, 32));
    let fast = nearest_neighbors(&q.vectors(), &k.vectors());
    let slow = brute(&q.vectors(), &k.vectors());
    for (f, s) in fast.iter().zip(&slow) {
        assert_eq!((f.index, f.similarity), *s);
    }
    let rm = retrieval_max(&q, &k).unwrap();
    let want = slow.iter().map(|s| s.1).sum::<f64>() / slow.len() as f64;
    assert!((rm - want).abs() < 1e-6);
}

#[test]
fn self_match_saturates_sim_aa() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let s = set_of("s", &gaussian_rows(&mut rng, 50, 16));
    for t in [0.90, 0.95] {
        let (ratio, records) = nn_similarity_ratio(&s, &s, t).unwrap();
        assert_eq!(ratio, 1.0);
        assert!(records.iter().all(|r| r.generated_id == r.segment_id));
    }
}

#[test]
fn orthogonal_sets_never_match() {
    let eye = |offset: usize| -> Vec<Vec<f64>> {
        (0..4)
            .map(|i| {
                let mut v = vec![0.0; 8];
                v[i + offset] = 1.0;
                v
            })
            .collect()
    };
    let (ratio, _) = nn_similarity_ratio(&set_of("g", &eye(0)), &set_of("t", &eye(4)), 0.9).unwrap();
    assert_eq!(ratio, 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sim_aa_is_monotone_and_order_free(seed in any::<u64>(), n in 1usize..30, m in 1usize..60) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = gaussian_rows(&mut rng, n, 6);
        let mut t = gaussian_rows(&mut rng, m, 6);
        let (r90, rec) = nn_similarity_ratio(&set_of("g", &g), &set_of("t", &t), 0.90).unwrap();
        let (r95, _) = nn_similarity_ratio(&set_of("g", &g), &set_of("t", &t), 0.95).unwrap();
        prop_assert!(r95 <= r90);
        // reversing both sets under fresh ids gives the same ratio and similarities
        let mut g_rev = g.clone();
        g_rev.reverse();
        t.reverse();
        let (r90b, rec_b) = nn_similarity_ratio(&set_of("g", &g_rev), &set_of("t", &t), 0.90).unwrap();
        prop_assert_eq!(r90, r90b);
        let mut a: Vec<f64> = rec.iter().map(|r| r.similarity).collect();
        let mut b: Vec<f64> = rec_b.iter().map(|r| r.similarity).collect();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn frechet_is_symmetric_and_non_negative(seed in any::<u64>(), n in 2usize..40, shift in -2.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = gaussian_rows(&mut rng, n, 4);
        let b: Vec<Vec<f64>> = gaussian_rows(&mut rng, n + 3, 4)
            .into_iter()
            .map(|r| r.into_iter().map(|x| 1.5 * x + shift).collect())
            .collect();
        let ra: Vec<&[f64]> = a.iter().map(Vec::as_slice).collect();
        let rb: Vec<&[f64]> = b.iter().map(Vec::as_slice).collect();
        let ab = frechet_distance(&ra, &rb).unwrap().value;
        let ba = frechet_distance(&rb, &ra).unwrap().value;
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - ba).abs() <= 1e-8);
    }

    #[test]
    fn inception_score_stays_in_range(seed in any::<u64>(), n in 1usize..40, k in 2usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut set = PosteriorSet::new(k);
        for i in 0..n {
            let raw: Vec<f64> = (0..k).map(|_| rng.random::<f64>().powi(3)).collect();
            let z: f64 = raw.iter().sum();
            set.insert(ClassPosterior::new(format!("p{i}"), raw.iter().map(|r| r / z).collect()).unwrap()).unwrap();
        }
        let is = inception_score(&set).unwrap();
        prop_assert!(is >= 1.0 && is <= k as f64 + 1e-9);
    }
}

fn rows(v: &[Vec<f64>]) -> Vec<&[f64]> {
    v.iter().map(Vec::as_slice).collect()
}

#[test]
fn frechet_of_a_set_with_itself_is_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let a = gaussian_rows(&mut rng, 500, 8);
    let r = frechet_distance(&rows(&a), &rows(&a)).unwrap();
    assert!(r.value.abs() < 1e-6, "{}", r.value);
    assert!(!r.regularized);
}

#[test]
fn one_dimensional_unit_shift() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let a: Vec<Vec<f64>> = (0..100_000).map(|_| vec![<StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)]).collect();
    let b: Vec<Vec<f64>> = (0..100_000)
        .map(|_| vec![1.0 + <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)])
        .collect();
    let fd = frechet_distance(&rows(&a), &rows(&b)).unwrap().value;
    assert!((fd - 1.0).abs() < 0.05, "{fd}");
}

#[test]
fn diagonal_sets_match_per_dimension_formula() {
    // full factorial grids have exactly zero cross-covariance
    let axis_a = [[-1.0, 0.5, 2.0, 3.5], [0.0, 0.1, 0.4, 0.9], [5.0, 4.0, 2.0, 1.0]];
    let axis_b = [[0.0, 0.25, 1.0, 1.5], [-2.0, -1.0, 3.0, 4.0], [1.0, 1.5, 2.0, 2.5]];
    let grid = |axes: &[[f64; 4]; 3]| -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        for &x in &axes[0] {
            for &y in &axes[1] {
                for &z in &axes[2] {
                    out.push(vec![x, y, z]);
                }
            }
        }
        out
    };
    let (a, b) = (grid(&axis_a), grid(&axis_b));
    let stats = |v: &[f64], reps: f64| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        let ss = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() * reps;
        (m, ss / (v.len() as f64 * reps - 1.0))
    };
    let mut want = 0.0;
    for d in 0..3 {
        let (ma, va) = stats(&axis_a[d], 16.0);
        let (mb, vb) = stats(&axis_b[d], 16.0);
        want += (ma - mb).powi(2) + va + vb - 2.0 * (va * vb).sqrt();
    }
    let got = frechet_distance(&rows(&a), &rows(&b)).unwrap().value;
    assert!((got - want).abs() < 1e-4, "{got} vs {want}");
}

#[test]
fn small_sets_are_regularized() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let a = gaussian_rows(&mut rng, 5, 8);
    let r = frechet_distance(&rows(&a), &rows(&a)).unwrap();
    assert!(r.regularized);
    assert!(r.value.abs() < 1e-6);
    let short = vec![vec![0.0; 7]];
    assert!(matches!(
        frechet_distance(&rows(&a), &rows(&short)),
        Err(MetricsError::DimMismatch(8, 7))
    ));
}

fn posteriors(rows: &[Vec<f64>]) -> PosteriorSet {
    let mut set = PosteriorSet::new(rows[0].len());
    for (i, r) in rows.iter().enumerate() {
        set.insert(ClassPosterior::new(format!("p{i:03}"), r.clone()).unwrap()).unwrap();
    }
    set
}

#[test]
fn inception_score_fixed_points() {
    assert_eq!(inception_score(&posteriors(&vec![vec![0.1; 10]; 37])).unwrap(), 1.0);
    let one_hot: Vec<Vec<f64>> = (0..10)
        .map(|i| (0..10).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let is = inception_score(&posteriors(&one_hot)).unwrap();
    assert!((is - 10.0).abs() < 1e-6, "{is}");
    let same = vec![vec![0.7, 0.2, 0.1]; 9];
    assert!((inception_score(&posteriors(&same)).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn paired_kl_cases() {
    let gt = posteriors(&[vec![1.0, 0.0], vec![0.3, 0.7]]);
    assert!(paired_kl(&gt, &gt, None).unwrap().abs() < 1e-9);

    let gt1 = posteriors(&[vec![1.0, 0.0]]);
    let gen1 = posteriors(&[vec![0.5, 0.5]]);
    let v = paired_kl(&gen1, &gt1, None).unwrap();
    assert!((v - std::f64::consts::LN_2).abs() < 1e-6, "{v}");

    let mut pairing = BTreeMap::new();
    pairing.insert("p000".to_string(), "nope".to_string());
    assert!(matches!(
        paired_kl(&gen1, &gt1, Some(&pairing)),
        Err(MetricsError::MissingPartner(_))
    ));
    let three = posteriors(&[vec![0.2, 0.3, 0.5]]);
    assert!(matches!(paired_kl(&three, &gt1, None), Err(MetricsError::InconsistentK(3, 2))));
}

#[test]
fn report_round_trips_and_tabulates() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let gen = set_of("c", &gaussian_rows(&mut rng, 12, 6));
    let train = set_of("s", &gaussian_rows(&mut rng, 30, 6));
    let texts = set_of("c", &gaussian_rows(&mut rng, 12, 6));
    let post = posteriors(&vec![vec![0.25; 4]; 12]);
    let inputs = ReportInputs {
        generated: Some(&gen),
        train_segments: Some(&train),
        texts: Some(&texts),
        fd: vec![FdInput {
            provider: "demo".into(),
            generated: &gen,
            reference: &train,
        }],
        generated_posteriors: Some(&post),
        reference_posteriors: Some(&post),
        ..ReportInputs::default()
    };
    let (report, audit) = build_report(&inputs).unwrap();
    assert_eq!(audit.len(), 12);
    let thresholds: Vec<f64> = report.sim_aa.iter().map(|s| s.threshold).collect();
    assert_eq!(thresholds, vec![0.90, 0.95]);
    let json = serde_json::to_string(&report).unwrap();
    let back: MetricsReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, report);
    assert!(!report.fd["demo"].regularized);
    assert_eq!(report.inception_score, Some(1.0));

    let partial = ReportInputs {
        generated: Some(&gen),
        train_segments: Some(&train),
        fd: vec![FdInput {
            provider: "demo".into(),
            generated: &gen,
            reference: &train,
        }],
        ..ReportInputs::default()
    };
    let (report, _) = build_report(&partial).unwrap();
    assert!(report.inception_score.is_none() && report.paired_kl.is_none());
    assert!(!report.sim_aa.is_empty() && report.fd.contains_key("demo"));
    let json: serde_json::Value = serde_json::to_value(&report).unwrap();
    assert!(json["inception_score"].is_null());
}

#[test]
fn table_uses_three_decimals() {
    let mut report = build_report::<f64>(&ReportInputs::default()).unwrap().0;
    report.mean_text_audio_sim = Some(0.325);
    let table = report.to_table();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].contains("Text-Audio Similarity"));
    assert!(lines[1].contains("0.325"));
    assert!(lines[1].contains('-'));
}
