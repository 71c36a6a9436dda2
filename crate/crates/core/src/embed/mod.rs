//! Embeddings and class posteriors from external providers.
//!
//! Every embedding leaving this module is unit-norm, so a dot product is a
//! cosine similarity.

mod format;
mod http;

pub use format::{
    load_embedding_set, load_posterior_set, parse_embedding_set, parse_posterior_set, read_records,
    save_embedding_set, save_posterior_set, write_records, RecordKind, RecordSet,
};
pub use http::{EmbeddingClient, Fetched, HttpConfig, Query};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("embedding {0:?} has zero norm")]
    ZeroNorm(String),
    #[error("schema error: {0}")]
    SchemaError(String),
    #[error("dimension mismatch for {id:?}: expected {expected}, got {got}")]
    DimMismatch {
        id: String,
        expected: usize,
        got: usize,
    },
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("posterior {id:?} sums to {sum}")]
    NotAProbability { id: String, sum: f64 },
    #[error("request timed out after {attempts} attempt(s)")]
    Timeout { attempts: u32 },
    #[error("provider answered HTTP {status}")]
    BadStatus { status: u16 },
    #[error("transport error: {0}")]
    Transport(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, EmbedError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Text,
    Audio,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Embedding<S> {
    pub id: String,
    pub modality: Modality,
    pub vector: Vec<S>,
}

impl<S: Real> Embedding<S> {
    pub fn new(id: impl Into<String>, modality: Modality, vector: Vec<S>) -> Result<Self> {
        let id = id.into();
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(EmbedError::SchemaError(format!("non-finite value in {id:?}")));
        }
        Ok(Self {
            id,
            modality,
            vector,
        })
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }

    pub fn norm(&self) -> S {
        self.vector.iter().map(|&v| v * v).sum::<S>().sqrt()
    }

    #[must_use = "normalize returns a new embedding"]
    pub fn normalize(&self) -> Result<Self> {
        let n = self.norm();
        if !(n > S::zero()) {
            return Err(EmbedError::ZeroNorm(self.id.clone()));
        }
        Ok(Self {
            id: self.id.clone(),
            modality: self.modality,
            vector: self.vector.iter().map(|&v| v / n).collect(),
        })
    }
}

/// Unit-norm embeddings keyed by id.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingSet<S> {
    dim: usize,
    items: BTreeMap<String, Embedding<S>>,
}

impl<S: Real> EmbeddingSet<S> {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            items: BTreeMap::new(),
        }
    }

    /// Normalizes and inserts.
    pub fn insert(&mut self, e: Embedding<S>) -> Result<()> {
        if e.dim() != self.dim {
            return Err(EmbedError::DimMismatch {
                got: e.dim(),
                expected: self.dim,
                id: e.id,
            });
        }
        if self.items.contains_key(&e.id) {
            return Err(EmbedError::DuplicateId(e.id));
        }
        let e = e.normalize()?;
        self.items.insert(e.id.clone(), e);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Embedding<S>> {
        self.items.get(id)
    }

    /// In id order.
    pub fn iter(&self) -> impl Iterator<Item = &Embedding<S>> {
        self.items.values()
    }

    pub fn ids(&self) -> Vec<&str> {
        self.items.keys().map(String::as_str).collect()
    }

    pub fn vectors(&self) -> Vec<&[S]> {
        self.items.values().map(|e| e.vector.as_slice()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassPosterior {
    pub id: String,
    pub probs: Vec<f64>,
}

impl ClassPosterior {
    /// Accepts rows summing to within `[0.99, 1.01]` and rescales them to sum to 1.
    pub fn new(id: impl Into<String>, probs: Vec<f64>) -> Result<Self> {
        let id = id.into();
        if probs.is_empty() {
            return Err(EmbedError::SchemaError(format!("posterior {id:?} is empty")));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            let sum = probs.iter().sum();
            return Err(EmbedError::NotAProbability { id, sum });
        }
        let sum: f64 = probs.iter().sum();
        if !(0.99..=1.01).contains(&sum) {
            return Err(EmbedError::NotAProbability { id, sum });
        }
        let probs = if sum == 1.0 {
            probs
        } else {
            probs.iter().map(|p| p / sum).collect()
        };
        Ok(Self { id, probs })
    }

    pub fn k(&self) -> usize {
        self.probs.len()
    }
}

/// Posteriors keyed by id, all with the same class count.
#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorSet {
    k: usize,
    items: BTreeMap<String, ClassPosterior>,
}

impl PosteriorSet {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            items: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, p: ClassPosterior) -> Result<()> {
        if p.k() != self.k {
            return Err(EmbedError::DimMismatch {
                got: p.k(),
                expected: self.k,
                id: p.id,
            });
        }
        if self.items.contains_key(&p.id) {
            return Err(EmbedError::DuplicateId(p.id));
        }
        self.items.insert(p.id.clone(), p);
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&ClassPosterior> {
        self.items.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &ClassPosterior> {
        self.items.values()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_scales_to_unit() {
        let mut v = vec![0.0f64; 512];
        v[0] = 3.0;
        v[1] = 4.0;
        let e = Embedding::new("x", Modality::Audio, v).unwrap().normalize().unwrap();
        assert_eq!(&e.vector[..3], &[0.6, 0.8, 0.0]);
    }

    #[test]
    fn unit_vectors_are_unchanged() {
        let v: Vec<f64> = vec![0.6, 0.0, 0.8];
        let e = Embedding::new("x", Modality::Text, v.clone()).unwrap().normalize().unwrap();
        for (a, b) in e.vector.iter().zip(&v) {
            assert!((a - b).abs() < 1e-7);
        }
    }

    #[test]
    fn zero_vector_has_no_direction() {
        let e = Embedding::new("z", Modality::Text, vec![0.0f32; 8]).unwrap();
        assert!(matches!(e.normalize(), Err(EmbedError::ZeroNorm(_))));
    }

    #[test]
    fn posterior_tolerance_rule() {
        let uniform = ClassPosterior::new("u", vec![0.25; 4]).unwrap();
        assert_eq!(uniform.probs, vec![0.25; 4]);
        assert!(matches!(
            ClassPosterior::new("h", vec![0.25, 0.25]),
            Err(EmbedError::NotAProbability { .. })
        ));
        let near = ClassPosterior::new("n", vec![0.5, 0.504]).unwrap();
        assert!((near.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(ClassPosterior::new("neg", vec![1.2, -0.2]).is_err());
    }

    #[test]
    fn sets_reject_duplicates_and_bad_dims() {
        let mut set = EmbeddingSet::<f64>::new(2);
        set.insert(Embedding::new("a", Modality::Audio, vec![1.0, 1.0]).unwrap()).unwrap();
        assert!(matches!(
            set.insert(Embedding::new("a", Modality::Audio, vec![1.0, 0.0]).unwrap()),
            Err(EmbedError::DuplicateId(_))
        ));
        assert!(matches!(
            set.insert(Embedding::new("b", Modality::Audio, vec![1.0]).unwrap()),
            Err(EmbedError::DimMismatch { .. })
        ));
    }
}
