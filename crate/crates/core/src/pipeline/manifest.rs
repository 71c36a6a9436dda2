use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{read_json, write_json, PipelineConfig, PipelineError, Result, Workspace};
use crate::mixup::group_id_for;

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    /// Relative to the corpus root, `/`-separated.
    pub path: String,
    pub content_hash: String,
    /// Length at the working sample rate.
    pub num_samples: u64,
    pub duration_seconds: f64,
    pub caption: String,
    pub caption_missing: bool,
    /// Beat annotation, relative to the work directory.
    pub beats: Option<String>,
    pub tempo_bpm: Option<f64>,
    pub group_id: Option<u32>,
    pub analysis_error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    /// Relative to the work directory.
    pub corpus_root: String,
    pub config: PipelineConfig,
    /// Sorted by id.
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn load(ws: &Workspace) -> Result<Self> {
        let path = ws.manifest();
        if !path.exists() {
            return Err(PipelineError::MissingPrerequisite(format!(
                "no manifest at {}; run `beatmix ingest <corpus>` first",
                path.display()
            )));
        }
        let m: Manifest = read_json(&path)?;
        if m.schema_version != MANIFEST_VERSION {
            return Err(PipelineError::Input {
                path,
                message: format!("unsupported manifest version {}", m.schema_version),
            });
        }
        Ok(m)
    }

    pub fn save(&self, ws: &Workspace) -> Result<()> {
        write_json(self, &ws.manifest())
    }

    pub fn corpus_dir(&self, ws: &Workspace) -> PathBuf {
        ws.resolve(&self.corpus_root)
    }

    pub fn audio_path(&self, ws: &Workspace, entry: &ManifestEntry) -> PathBuf {
        self.corpus_dir(ws).join(&entry.path)
    }

    pub fn get(&self, id: &str) -> Option<&ManifestEntry> {
        self.entries
            .binary_search_by(|e| e.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.entries[i])
    }

    /// Ids must be unique and every referenced file must exist. Group ids
    /// must agree with the configured bucket width.
    pub fn validate(&self, ws: &Workspace) -> Result<()> {
        let bad = |path: &Path, m: String| {
            Err(PipelineError::Input {
                path: path.to_path_buf(),
                message: m,
            })
        };
        let manifest_path = ws.manifest();
        let mut seen = BTreeSet::new();
        for e in &self.entries {
            if !seen.insert(e.id.as_str()) {
                return bad(&manifest_path, format!("duplicate id {:?}", e.id));
            }
            let audio = self.audio_path(ws, e);
            if !audio.is_file() {
                return bad(&audio, format!("audio for {:?} is missing", e.id));
            }
            if let Some(b) = &e.beats {
                let p = ws.resolve(b);
                if !p.is_file() {
                    return bad(&p, format!("beat annotation for {:?} is missing", e.id));
                }
            }
            if let (Some(g), Some(bpm)) = (e.group_id, e.tempo_bpm) {
                let want = group_id_for(bpm, self.config.bucket_width)
                    .map_err(|err| PipelineError::Config(err.to_string()))?;
                if want != g {
                    return bad(
                        &manifest_path,
                        format!("{:?} is in group {g} but its tempo {bpm} belongs in {want}", e.id),
                    );
                }
            }
        }
        Ok(())
    }
}
