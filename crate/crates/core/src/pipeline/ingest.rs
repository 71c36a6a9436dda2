use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use walkdir::WalkDir;

use super::{
    input_err, internal_err, read_json, with_pool, Manifest, ManifestEntry, PipelineConfig, PipelineError,
    Result, Workspace, MANIFEST_VERSION,
};
use crate::dsp::decode_wav;
use crate::io_util::sha256_hex;

/// Where captions come from.
#[derive(Clone, Debug)]
pub enum CaptionSource {
    /// `<name>.txt` next to each WAV.
    Sidecars,
    /// One JSON object mapping track ids to captions.
    JsonMap(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct IngestSummary {
    pub tracks: usize,
    pub missing_captions: usize,
}

/// `/`-joined components, so manifests read the same on every platform.
pub(crate) fn portable(path: &Path) -> String {
    path.components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}

fn relative_to(target: &Path, base: &Path) -> Result<String> {
    let t = std::path::absolute(target).map_err(input_err(target))?;
    let b = std::path::absolute(base).map_err(input_err(base))?;
    let rel = pathdiff::diff_paths(&t, &b).unwrap_or(t);
    let s = portable(&rel);
    Ok(if s.is_empty() { ".".into() } else { s })
}

fn is_wav(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("wav"))
}

/// Scans `corpus_dir` for WAV files and writes a fresh manifest. Analysis
/// fields start empty.
pub fn cmd_ingest(
    ws: &Workspace,
    corpus_dir: &Path,
    captions: &CaptionSource,
    config: &PipelineConfig,
) -> Result<(Manifest, IngestSummary)> {
    config.validate()?;
    if !corpus_dir.is_dir() {
        return Err(PipelineError::Input {
            path: corpus_dir.to_path_buf(),
            message: "not a directory".into(),
        });
    }
    let mut by_id: BTreeMap<String, PathBuf> = BTreeMap::new();
    for item in WalkDir::new(corpus_dir).sort_by_file_name() {
        let item = item.map_err(input_err(corpus_dir))?;
        if !item.file_type().is_file() || !is_wav(item.path()) {
            continue;
        }
        let rel = item
            .path()
            .strip_prefix(corpus_dir)
            .expect("walk stays under its root")
            .to_path_buf();
        let id = rel
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        if let Some(first) = by_id.get(&id) {
            return Err(PipelineError::DuplicateBasename {
                name: id,
                first: first.clone(),
                second: rel,
            });
        }
        by_id.insert(id, rel);
    }
    if by_id.is_empty() {
        return Err(PipelineError::EmptyCorpus(corpus_dir.to_path_buf()));
    }

    let caption_map: Option<BTreeMap<String, String>> = match captions {
        CaptionSource::Sidecars => None,
        CaptionSource::JsonMap(p) => Some(read_json(p)?),
    };

    let sr = config.signal.sample_rate;
    let items: Vec<(String, PathBuf)> = by_id.into_iter().collect();
    let entries = with_pool(config.jobs, || {
        items
            .par_iter()
            .map(|(id, rel)| {
                let path = corpus_dir.join(rel);
                let bytes = std::fs::read(&path).map_err(input_err(&path))?;
                let wave = decode_wav::<f32>(&bytes, sr).map_err(input_err(&path))?;
                let caption = match &caption_map {
                    Some(map) => map.get(id).map(|c| c.trim().to_string()),
                    None => {
                        let txt = path.with_extension("txt");
                        match std::fs::read_to_string(&txt) {
                            Ok(t) => Some(t.trim().to_string()),
                            Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
                            Err(e) => return Err(input_err(&txt)(e)),
                        }
                    }
                };
                Ok(ManifestEntry {
                    id: id.clone(),
                    path: portable(rel),
                    content_hash: sha256_hex(&bytes),
                    num_samples: wave.len() as u64,
                    duration_seconds: wave.duration_seconds(),
                    caption_missing: caption.is_none(),
                    caption: caption.unwrap_or_default(),
                    beats: None,
                    tempo_bpm: None,
                    group_id: None,
                    analysis_error: None,
                })
            })
            .collect::<Result<Vec<_>>>()
    })??;

    let missing = entries.iter().filter(|e| e.caption_missing).count();
    for e in entries.iter().filter(|e| e.caption_missing) {
        log::warn!("{}: no caption, recorded as empty", e.path);
    }
    std::fs::create_dir_all(ws.root()).map_err(internal_err("create work directory"))?;
    let manifest = Manifest {
        schema_version: MANIFEST_VERSION,
        corpus_root: relative_to(corpus_dir, ws.root())?,
        config: config.clone(),
        entries,
    };
    manifest.save(ws)?;
    let summary = IngestSummary {
        tracks: manifest.entries.len(),
        missing_captions: missing,
    };
    Ok((manifest, summary))
}
