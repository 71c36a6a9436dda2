use std::path::{Path, PathBuf};

/// Layout of the work directory.
#[derive(Clone, Debug)]
pub struct Workspace {
    root: PathBuf,
}

impl Workspace {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Resolves a path stored relative to the work directory.
    pub fn resolve(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn config_file(&self) -> PathBuf {
        self.root.join("beatmix.toml")
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.json")
    }

    pub fn beats_cache_dir(&self) -> PathBuf {
        self.root.join("cache").join("beats")
    }

    pub fn groups(&self) -> PathBuf {
        self.root.join("groups.json")
    }

    pub fn codec(&self) -> PathBuf {
        self.root.join("codec.bin")
    }

    pub fn mix_dir(&self) -> PathBuf {
        self.root.join("mix")
    }

    pub fn segments(&self) -> PathBuf {
        self.root.join("segments.json")
    }

    pub fn emb_dir(&self) -> PathBuf {
        self.root.join("emb")
    }
}
