use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{write_file, ExpError, Result};

pub const MANIFEST_FILE: &str = "manifest.toml";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub kind: String,
    /// Relative to the run directory.
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub name: String,
    pub seconds: f64,
}

/// Record of one command invocation. Timings live only here, so every other
/// artifact is reproducible byte for byte.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub config_hash: String,
    pub config_file: PathBuf,
    #[serde(default)]
    pub notes: Vec<String>,
    #[serde(default)]
    pub metrics: BTreeMap<String, f64>,
    #[serde(default)]
    pub artifacts: Vec<Artifact>,
    #[serde(default)]
    pub timings: Vec<Timing>,
}

impl RunManifest {
    pub fn new(command: &str, config_hash: String) -> Self {
        RunManifest {
            command: command.to_string(),
            tool_version: format!("memlab {}", env!("CARGO_PKG_VERSION")),
            config_hash,
            config_file: PathBuf::from("config.toml"),
            notes: Vec::new(),
            metrics: BTreeMap::new(),
            artifacts: Vec::new(),
            timings: Vec::new(),
        }
    }

    /// Writes `contents` under `root` and records its hash.
    pub fn write_artifact(&mut self, root: &Path, rel: impl Into<PathBuf>, kind: &str, contents: &[u8]) -> Result<PathBuf> {
        let rel = rel.into();
        let full = root.join(&rel);
        write_file(&full, contents)?;
        self.record(rel, kind, contents);
        Ok(full)
    }

    /// Records an artifact already written to disk.
    pub fn record(&mut self, rel: PathBuf, kind: &str, contents: &[u8]) {
        self.artifacts.push(Artifact {
            kind: kind.to_string(),
            path: rel,
            sha256: sha256_hex(contents),
        });
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    pub fn from_text(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| ExpError::Runtime(format!("unreadable manifest: {e}")))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| ExpError::io(&path, e))?;
        Self::from_text(&text)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        write_file(&dir.join(MANIFEST_FILE), self.to_text())
    }

    /// Checks that every artifact exists and still has its recorded hash.
    pub fn verify(&self, dir: &Path) -> Result<()> {
        for a in &self.artifacts {
            let path = dir.join(&a.path);
            let bytes = std::fs::read(&path).map_err(|e| ExpError::io(&path, e))?;
            if sha256_hex(&bytes) != a.sha256 {
                return Err(ExpError::Runtime(format!("{} does not match its recorded hash", path.display())));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn verify_detects_tampering() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = RunManifest::new("train", "h".into());
        m.write_artifact(dir.path(), "a/report.csv", "report", b"1,2\n").unwrap();
        m.timings.push(Timing {
            name: "total".into(),
            seconds: 0.5,
        });
        m.save(dir.path()).unwrap();
        let back = RunManifest::load(dir.path()).unwrap();
        assert_eq!(back, m);
        back.verify(dir.path()).unwrap();
        std::fs::write(dir.path().join("a/report.csv"), b"1,3\n").unwrap();
        assert!(back.verify(dir.path()).is_err());
        std::fs::remove_file(dir.path().join("a/report.csv")).unwrap();
        assert!(matches!(back.verify(dir.path()), Err(ExpError::Io { .. })));
    }
}
