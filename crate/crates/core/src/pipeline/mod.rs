//! Corpus-to-report workflow: ingest, beat analysis, grouping, codec
//! fitting, mixup rendering, segmentation, embedding and evaluation. Every
//! stage reads and writes plain files under one work directory.

mod analyze;
mod config;
mod corpus;
mod embedders;
mod eval;
mod ingest;
mod manifest;
mod run;
mod stages;
mod workspace;

pub use analyze::{cmd_analyze, AnalyzeSummary};
pub use config::PipelineConfig;
pub use corpus::{write_synthetic_corpus, SyntheticCorpus};
pub use embedders::{
    band_posterior, cmd_embed, hashgram_embedding, melstat_embedding, EmbedProvider, EmbedSummary, BAND_CLASSES,
    BUILTIN_DIM,
};
pub use eval::{cmd_eval, EvalOptions};
pub use ingest::{cmd_ingest, CaptionSource, IngestSummary};
pub use manifest::{Manifest, ManifestEntry, MANIFEST_VERSION};
pub use run::run_pipeline;
pub use stages::{
    cmd_fit_codec, cmd_group, cmd_mix, cmd_segment, GroupTable, MixOptions, MixSummary, Segment,
    SegmentIndex, INDEX_VERSION,
};
pub use workspace::Workspace;

use std::fmt::Display;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("no WAV files found under {0}")]
    EmptyCorpus(PathBuf),
    #[error("basename {name:?} is used by both {first} and {second}")]
    DuplicateBasename {
        name: String,
        first: PathBuf,
        second: PathBuf,
    },
    #[error("{0}")]
    MissingPrerequisite(String),
    #[error("{}: {message}", path.display())]
    Input { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("all {0} tracks failed beat analysis")]
    AllTracksFailed(usize),
    #[error(transparent)]
    Metrics(#[from] crate::metrics::MetricsError),
    #[error("{context}: {message}")]
    Internal { context: String, message: String },
}

impl PipelineError {
    /// 1 for problems with the inputs, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Internal { .. } => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, PipelineError>;

pub(crate) fn input_err<E: Display>(path: &Path) -> impl FnOnce(E) -> PipelineError + '_ {
    move |e| PipelineError::Input {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

pub(crate) fn internal_err<E: Display>(context: &str) -> impl FnOnce(E) -> PipelineError + '_ {
    move |e| PipelineError::Internal {
        context: context.to_string(),
        message: e.to_string(),
    }
}

/// Pretty JSON with a trailing newline, written atomically.
pub(crate) fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(internal_err("serialize"))?;
    text.push('\n');
    crate::io_util::write_atomic(path, text.as_bytes()).map_err(internal_err(&path.display().to_string()))
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(input_err(path))?;
    serde_json::from_str(&text).map_err(input_err(path))
}

/// Runs `f` on a pool of `jobs` threads, or the global pool when `jobs` is 0.
pub(crate) fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if jobs == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(internal_err("thread pool"))?;
    Ok(pool.install(f))
}

/// `path` relative to the work directory, `/`-separated.
pub(crate) fn portable_rel(path: &Path, ws: &Workspace) -> String {
    let rel = path.strip_prefix(ws.root()).unwrap_or(path);
    ingest::portable(rel)
}
