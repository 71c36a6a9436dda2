//! Blocking client for an embedding service.
//!
//! `POST <endpoint>/embed/audio` with a WAV body or `POST <endpoint>/embed/text`
//! with a UTF-8 body; the answer is JSON `{"dim": D, "vector": [...]}`.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::Deserialize;

use super::{EmbedError, Embedding, Modality, Result};
use crate::dsp::{encode_wav_pcm16, Waveform};
use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct HttpConfig {
    pub endpoint: String,
    /// Expected vector length.
    pub dim: usize,
    pub timeout: Duration,
    /// Extra attempts after the first.
    pub retries: u32,
    /// Delay before the first retry; doubled for each further one.
    pub backoff: Duration,
    pub max_inflight: usize,
}

impl Default for HttpConfig {
    fn default() -> Self {
        Self {
            endpoint: "http://127.0.0.1:8080".into(),
            dim: 512,
            timeout: Duration::from_secs(30),
            retries: 3,
            backoff: Duration::from_millis(200),
            max_inflight: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fetched<S> {
    pub embedding: Embedding<S>,
    /// Attempts that failed before the one that succeeded.
    pub retries: u32,
}

/// A single request for [`EmbeddingClient::fetch_many`].
pub enum Query<'a, S> {
    Audio { id: &'a str, wave: &'a Waveform<S> },
    Text { id: &'a str, text: &'a str },
}

#[derive(Deserialize)]
struct Answer {
    dim: usize,
    vector: Vec<f64>,
}

pub struct EmbeddingClient {
    cfg: HttpConfig,
    client: reqwest::blocking::Client,
}

impl EmbeddingClient {
    pub fn new(cfg: HttpConfig) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(cfg.timeout)
            .build()
            .map_err(|e| EmbedError::Transport(e.to_string()))?;
        Ok(Self { cfg, client })
    }

    pub fn config(&self) -> &HttpConfig {
        &self.cfg
    }

    pub fn fetch_audio<S: Real>(&self, id: &str, wave: &Waveform<S>) -> Result<Fetched<S>> {
        let body = encode_wav_pcm16(wave).map_err(|e| EmbedError::SchemaError(e.to_string()))?;
        self.fetch(id, Modality::Audio, "audio", "audio/wav", body)
    }

    pub fn fetch_text<S: Real>(&self, id: &str, text: &str) -> Result<Fetched<S>> {
        let body = text.as_bytes().to_vec();
        self.fetch(id, Modality::Text, "text", "text/plain; charset=utf-8", body)
    }

    /// Runs with at most `max_inflight` requests at once. Results keep input order.
    pub fn fetch_many<S: Real>(&self, queries: &[Query<'_, S>]) -> Vec<Result<Fetched<S>>> {
        let workers = self.cfg.max_inflight.clamp(1, queries.len().max(1));
        let next = AtomicUsize::new(0);
        let slots: Vec<Mutex<Option<Result<Fetched<S>>>>> =
            queries.iter().map(|_| Mutex::new(None)).collect();
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(q) = queries.get(i) else { break };
                    let r = match q {
                        Query::Audio { id, wave } => self.fetch_audio(id, wave),
                        Query::Text { id, text } => self.fetch_text(id, text),
                    };
                    *slots[i].lock().expect("result slot") = Some(r);
                });
            }
        });
        slots
            .into_iter()
            .map(|m| m.into_inner().expect("result slot").expect("every query answered"))
            .collect()
    }

    fn fetch<S: Real>(
        &self,
        id: &str,
        modality: Modality,
        route: &str,
        content_type: &str,
        body: Vec<u8>,
    ) -> Result<Fetched<S>> {
        let url = format!("{}/embed/{route}", self.cfg.endpoint.trim_end_matches('/'));
        let mut attempt = 0u32;
        loop {
            match self.attempt(&url, content_type, &body) {
                Ok(answer) => {
                    let embedding = self.check(id, modality, answer)?;
                    return Ok(Fetched {
                        embedding,
                        retries: attempt,
                    });
                }
                Err(e) if retryable(&e) && attempt < self.cfg.retries => {
                    let delay = self.cfg.backoff.saturating_mul(1u32 << attempt.min(16));
                    log::debug!("{url}: {e}; retrying in {delay:?}");
                    std::thread::sleep(delay);
                    attempt += 1;
                }
                Err(EmbedError::Timeout { .. }) => {
                    return Err(EmbedError::Timeout {
                        attempts: attempt + 1,
                    })
                }
                Err(e) => return Err(e),
            }
        }
    }

    fn attempt(&self, url: &str, content_type: &str, body: &[u8]) -> Result<Answer> {
        let response = self
            .client
            .post(url)
            .header(reqwest::header::CONTENT_TYPE, content_type)
            .body(body.to_vec())
            .send()
            .map_err(map_transport)?;
        let status = response.status().as_u16();
        if !(200..300).contains(&status) {
            return Err(EmbedError::BadStatus { status });
        }
        let bytes = response.bytes().map_err(map_transport)?;
        serde_json::from_slice(&bytes).map_err(|e| EmbedError::SchemaError(e.to_string()))
    }

    fn check<S: Real>(&self, id: &str, modality: Modality, answer: Answer) -> Result<Embedding<S>> {
        if answer.dim != answer.vector.len() {
            return Err(EmbedError::SchemaError(format!(
                "answer claims dim {} but carries {} values",
                answer.dim,
                answer.vector.len()
            )));
        }
        if answer.dim != self.cfg.dim {
            return Err(EmbedError::DimMismatch {
                id: id.to_string(),
                expected: self.cfg.dim,
                got: answer.dim,
            });
        }
        let vector = answer
            .vector
            .into_iter()
            .map(|v| S::from_f64(v).unwrap_or_else(S::nan))
            .collect();
        Embedding::new(id, modality, vector)?.normalize()
    }
}

fn map_transport(e: reqwest::Error) -> EmbedError {
    if e.is_timeout() {
        EmbedError::Timeout { attempts: 1 }
    } else {
        EmbedError::Transport(e.to_string())
    }
}

fn retryable(e: &EmbedError) -> bool {
    match e {
        EmbedError::Timeout { .. } | EmbedError::Transport(_) => true,
        EmbedError::BadStatus { status } => *status >= 500 || *status == 429,
        _ => false,
    }
}
