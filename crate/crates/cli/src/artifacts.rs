//! Atomic artifact output with a content-hash manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_NAME: &str = "manifest.json";

/// One line of `manifest.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Path relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    /// Pipeline stage that wrote the file.
    pub producer: String,
}

/// Writes artifacts into one directory, each via a temporary file and a
/// rename, and remembers them so a failed run can be rolled back.
#[derive(Debug)]
pub struct ArtifactWriter {
    root: PathBuf,
    created_root: bool,
    entries: Vec<ManifestEntry>,
}

impl ArtifactWriter {
    /// Opens `root`, creating it if needed. The parent must already exist.
    pub fn create(root: &Path) -> anyhow::Result<Self> {
        let created_root = if root.is_dir() {
            false
        } else {
            fs::create_dir(root)
                .with_context(|| format!("creating output directory {}", root.display()))?;
            true
        };
        Ok(Self {
            root: root.to_path_buf(),
            created_root,
            entries: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn write(&mut self, name: &str, bytes: &[u8], producer: &str) -> anyhow::Result<()> {
        if name.contains(['/', '\\']) || name == MANIFEST_NAME {
            bail!("invalid artifact name {name:?}");
        }
        if self.entries.iter().any(|e| e.path == name) {
            bail!("artifact {name} written twice");
        }
        persist(&self.root, name, bytes)?;
        self.entries.push(ManifestEntry {
            path: name.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
            producer: producer.to_string(),
        });
        Ok(())
    }

    /// Writes `manifest.json`, entries sorted by path, and returns them.
    pub fn finish(mut self) -> anyhow::Result<Vec<ManifestEntry>> {
        self.entries.sort_by(|a, b| a.path.cmp(&b.path));
        let mut json = serde_json::to_vec_pretty(&self.entries)?;
        json.push(b'\n');
        persist(&self.root, MANIFEST_NAME, &json)?;
        Ok(self.entries)
    }

    /// Removes everything written so far, and the directory if this writer
    /// created it and it is now empty.
    pub fn abort(self) {
        for e in &self.entries {
            let _ = fs::remove_file(self.root.join(&e.path));
        }
        if self.created_root {
            let _ = fs::remove_dir(&self.root);
        }
    }
}

fn persist(root: &Path, name: &str, bytes: &[u8]) -> anyhow::Result<()> {
    let target = root.join(name);
    let mut tmp = tempfile::NamedTempFile::new_in(root)
        .with_context(|| format!("creating a temporary file in {}", root.display()))?;
    tmp.write_all(bytes)
        .and_then(|_| tmp.flush())
        .with_context(|| format!("writing {}", target.display()))?;
    tmp.persist(&target)
        .map_err(|e| e.error)
        .with_context(|| format!("renaming into {}", target.display()))?;
    Ok(())
}

/// Reads a manifest back.
pub fn read_manifest(path: &Path) -> anyhow::Result<Vec<ManifestEntry>> {
    let text = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(serde_json::from_slice(&text)?)
}
