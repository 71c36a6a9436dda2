//! Objective evaluation metrics over embeddings and class posteriors.

mod classifier;
mod frechet;
mod nn;
mod report;

pub use classifier::{inception_score, paired_kl, KL_EPSILON};
pub use frechet::{frechet_distance, FrechetResult, FD_REGULARIZATION};
pub use nn::{nearest_neighbors, Neighbor};
pub use report::{
    build_report, FdEntry, FdInput, KlEntry, MetricsReport, ReportInputs, SimAaEntry, DEFAULT_THRESHOLDS,
    REPORT_SCHEMA_VERSION,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed::{Embedding, EmbeddingSet};
use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("empty input set: {0}")]
    EmptySet(&'static str),
    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("generated item {0:?} has no ground-truth partner")]
    MissingPartner(String),
    #[error("class counts differ: {0} vs {1}")]
    InconsistentK(usize, usize),
    #[error("threshold {0} outside [0, 1]")]
    InvalidThreshold(f64),
}

pub type Result<T> = std::result::Result<T, MetricsError>;

/// Dot product accumulated in f64, left to right.
#[inline]
pub(crate) fn dot_f64<S: Real>(a: &[S], b: &[S]) -> f64 {
    let mut acc = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        acc += x.as_f64() * y.as_f64();
    }
    acc
}

/// Cosine of two unit-norm embeddings.
pub fn text_audio_similarity<S: Real>(e_t: &Embedding<S>, e_a: &Embedding<S>) -> Result<f64> {
    if e_t.dim() != e_a.dim() {
        return Err(MetricsError::DimMismatch(e_t.dim(), e_a.dim()));
    }
    Ok(dot_f64(&e_t.vector, &e_a.vector).clamp(-1.0, 1.0))
}

pub fn mean_text_audio_similarity<S: Real>(pairs: &[(&Embedding<S>, &Embedding<S>)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(MetricsError::EmptySet("text-audio pairs"));
    }
    let mut sum = 0.0;
    for (t, a) in pairs {
        sum += text_audio_similarity(t, a)?;
    }
    Ok(sum / pairs.len() as f64)
}

/// Mean over texts of the best cosine against any training audio embedding.
pub fn retrieval_max<S: Real>(texts: &EmbeddingSet<S>, train_audio: &EmbeddingSet<S>) -> Result<f64> {
    if texts.is_empty() {
        return Err(MetricsError::EmptySet("text embeddings"));
    }
    if train_audio.is_empty() {
        return Err(MetricsError::EmptySet("training audio embeddings"));
    }
    if texts.dim() != train_audio.dim() {
        return Err(MetricsError::DimMismatch(texts.dim(), train_audio.dim()));
    }
    let best = nearest_neighbors(&texts.vectors(), &train_audio.vectors());
    Ok(best.iter().map(|n| n.similarity).sum::<f64>() / best.len() as f64)
}

/// One generated item's closest training segment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NnRecord {
    pub generated_id: String,
    pub segment_id: String,
    pub similarity: f64,
}

/// Nearest training segment for every generated embedding, in id order.
pub fn nn_records<S: Real>(gen: &EmbeddingSet<S>, train: &EmbeddingSet<S>) -> Result<Vec<NnRecord>> {
    if gen.is_empty() {
        return Err(MetricsError::EmptySet("generated embeddings"));
    }
    if train.is_empty() {
        return Err(MetricsError::EmptySet("training segment embeddings"));
    }
    if gen.dim() != train.dim() {
        return Err(MetricsError::DimMismatch(gen.dim(), train.dim()));
    }
    let seg_ids = train.ids();
    let best = nearest_neighbors(&gen.vectors(), &train.vectors());
    Ok(gen
        .ids()
        .into_iter()
        .zip(best)
        .map(|(g, n)| NnRecord {
            generated_id: g.to_string(),
            segment_id: seg_ids[n.index].to_string(),
            similarity: n.similarity,
        })
        .collect())
}

/// Fraction of records whose similarity reaches `threshold`.
pub fn ratio_at(records: &[NnRecord], threshold: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(MetricsError::InvalidThreshold(threshold));
    }
    if records.is_empty() {
        return Err(MetricsError::EmptySet("nearest-neighbour records"));
    }
    let hits = records.iter().filter(|r| r.similarity >= threshold).count();
    Ok(hits as f64 / records.len() as f64)
}

/// SIM_AA at one threshold, with the per-item audit trail.
pub fn nn_similarity_ratio<S: Real>(
    gen: &EmbeddingSet<S>,
    train: &EmbeddingSet<S>,
    threshold: f64,
) -> Result<(f64, Vec<NnRecord>)> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(MetricsError::InvalidThreshold(threshold));
    }
    let records = nn_records(gen, train)?;
    Ok((ratio_at(&records, threshold)?, records))
}
