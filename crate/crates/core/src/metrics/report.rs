use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::classifier::{inception_score, paired_kl, KL_EPSILON};
use super::frechet::{frechet_distance, FD_REGULARIZATION};
use super::{mean_text_audio_similarity, nn_records, ratio_at, retrieval_max, MetricsError, NnRecord, Result};
use crate::embed::{EmbeddingSet, PosteriorSet};
use crate::scalar::Real;

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_THRESHOLDS: [f64; 2] = [0.90, 0.95];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdEntry {
    pub value: f64,
    pub regularized: bool,
    pub regularization: f64,
    pub n_generated: usize,
    pub n_reference: usize,
    pub dim: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KlEntry {
    pub value: f64,
    pub direction: String,
    pub log_base: String,
    pub epsilon: f64,
    pub pairs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimAaEntry {
    pub threshold: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub schema_version: u32,
    /// Keyed by embedding provider.
    pub fd: BTreeMap<String, FdEntry>,
    pub inception_score: Option<f64>,
    pub paired_kl: Option<KlEntry>,
    pub mean_text_audio_sim: Option<f64>,
    pub retrieval_max: Option<f64>,
    /// Ascending thresholds.
    pub sim_aa: Vec<SimAaEntry>,
    pub counts: BTreeMap<String, usize>,
    pub providers: BTreeMap<String, String>,
}

pub struct FdInput<'a, S> {
    pub provider: String,
    pub generated: &'a EmbeddingSet<S>,
    pub reference: &'a EmbeddingSet<S>,
}

/// Everything a report can be built from; absent inputs leave their metrics empty.
pub struct ReportInputs<'a, S> {
    pub generated: Option<&'a EmbeddingSet<S>>,
    pub train_segments: Option<&'a EmbeddingSet<S>>,
    /// Caption embeddings, paired with `generated` by id.
    pub texts: Option<&'a EmbeddingSet<S>>,
    pub fd: Vec<FdInput<'a, S>>,
    pub generated_posteriors: Option<&'a PosteriorSet>,
    pub reference_posteriors: Option<&'a PosteriorSet>,
    pub thresholds: Vec<f64>,
    /// Free-form provenance, e.g. file names per input.
    pub providers: BTreeMap<String, String>,
}

impl<S> Default for ReportInputs<'_, S> {
    fn default() -> Self {
        Self {
            generated: None,
            train_segments: None,
            texts: None,
            fd: Vec::new(),
            generated_posteriors: None,
            reference_posteriors: None,
            thresholds: DEFAULT_THRESHOLDS.to_vec(),
            providers: BTreeMap::new(),
        }
    }
}

/// Computes every metric the inputs allow. Also returns the per-item
/// nearest-neighbour audit when SIM_AA was computed.
pub fn build_report<S: Real>(inputs: &ReportInputs<'_, S>) -> Result<(MetricsReport, Vec<NnRecord>)> {
    let mut thresholds = inputs.thresholds.clone();
    for &t in &thresholds {
        if !(0.0..=1.0).contains(&t) {
            return Err(MetricsError::InvalidThreshold(t));
        }
    }
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();

    let mut counts = BTreeMap::new();
    let mut fd = BTreeMap::new();
    for input in &inputs.fd {
        let r = frechet_distance(&input.generated.vectors(), &input.reference.vectors())?;
        fd.insert(
            input.provider.clone(),
            FdEntry {
                value: r.value,
                regularized: r.regularized,
                regularization: if r.regularized { FD_REGULARIZATION } else { 0.0 },
                n_generated: r.n_a,
                n_reference: r.n_b,
                dim: r.dim,
            },
        );
    }

    let mut audit = Vec::new();
    let mut sim_aa = Vec::new();
    if let (Some(gen), Some(train)) = (inputs.generated, inputs.train_segments) {
        audit = nn_records(gen, train)?;
        for &t in &thresholds {
            sim_aa.push(SimAaEntry {
                threshold: t,
                ratio: ratio_at(&audit, t)?,
            });
        }
        counts.insert("generated".into(), gen.len());
        counts.insert("train_segments".into(), train.len());
    }

    let mut mean_text_audio_sim = None;
    if let (Some(texts), Some(gen)) = (inputs.texts, inputs.generated) {
        let pairs = gen
            .iter()
            .map(|a| {
                texts
                    .get(&a.id)
                    .map(|t| (t, a))
                    .ok_or_else(|| MetricsError::MissingPartner(a.id.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        mean_text_audio_sim = Some(mean_text_audio_similarity(&pairs)?);
        counts.insert("texts".into(), texts.len());
    }
    let mut retrieval = None;
    if let (Some(texts), Some(train)) = (inputs.texts, inputs.train_segments) {
        retrieval = Some(retrieval_max(texts, train)?);
    }

    let mut is = None;
    if let Some(post) = inputs.generated_posteriors {
        is = Some(inception_score(post)?);
        counts.insert("generated_posteriors".into(), post.len());
    }
    let mut kl = None;
    if let (Some(gen), Some(gt)) = (inputs.generated_posteriors, inputs.reference_posteriors) {
        kl = Some(KlEntry {
            value: paired_kl(gen, gt, None)?,
            direction: "KL(groundtruth || generated)".into(),
            log_base: "e".into(),
            epsilon: KL_EPSILON,
            pairs: gen.len(),
        });
        counts.insert("reference_posteriors".into(), gt.len());
    }

    let report = MetricsReport {
        schema_version: REPORT_SCHEMA_VERSION,
        fd,
        inception_score: is,
        paired_kl: kl,
        mean_text_audio_sim,
        retrieval_max: retrieval,
        sim_aa,
        counts,
        providers: inputs.providers.clone(),
    };
    Ok((report, audit))
}

fn fmt3(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.3}"))
}

impl MetricsReport {
    /// One header row and one value row, columns padded to equal width.
    pub fn to_table(&self) -> String {
        let mut cols: Vec<(String, String)> = Vec::new();
        for (provider, e) in &self.fd {
            cols.push((format!("FD_{provider}"), fmt3(Some(e.value))));
        }
        cols.push(("Inception Score".into(), fmt3(self.inception_score)));
        cols.push(("KL Div.".into(), fmt3(self.paired_kl.as_ref().map(|k| k.value))));
        cols.push(("Text-Audio Similarity".into(), fmt3(self.mean_text_audio_sim)));
        cols.push(("Retrieval Max".into(), fmt3(self.retrieval_max)));
        for s in &self.sim_aa {
            cols.push((
                format!("SIM_AA@{}", (s.threshold * 100.0).round()),
                fmt3(Some(s.ratio)),
            ));
        }
        let widths: Vec<usize> = cols.iter().map(|(h, v)| h.len().max(v.len())).collect();
        let line = |pick: &dyn Fn(&(String, String)) -> &str| {
            cols.iter()
                .zip(&widths)
                .map(|(c, &w)| format!("{:>w$}", pick(c)))
                .collect::<Vec<_>>()
                .join("  ")
        };
        format!("{}\n{}\n", line(&|c| c.0.as_str()), line(&|c| c.1.as_str()))
    }
}
