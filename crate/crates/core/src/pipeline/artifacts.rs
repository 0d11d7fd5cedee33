//! Artifact layout, digest stamps and the run manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::config::{file_digest, LabelSource};
use crate::error::{Error, Result};
use crate::model::ModelMode;
use crate::prior::PriorCache;

/// A payload tagged with the digest of the configuration that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stamped<T> {
    pub config_digest: String,
    pub seed: u64,
    pub payload: T,
}

impl<T: Serialize + DeserializeOwned> Stamped<T> {
    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_json(path, self)
    }

    /// Loads `path`, naming `command` when it is missing and rejecting a
    /// digest other than `expected`.
    pub fn load_fresh(path: &Path, command: &'static str, expected: &str) -> Result<Self> {
        require(path, command)?;
        let s: Stamped<T> = crate::io::read_json(path)?;
        check_fresh(path, expected, &s.config_digest)?;
        Ok(s)
    }
}

pub(crate) fn require(path: &Path, command: &'static str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Dependency {
            path: path.to_path_buf(),
            command,
        })
    }
}

pub(crate) fn check_fresh(path: &Path, expected: &str, found: &str) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::StaleArtifact {
            path: path.to_path_buf(),
            expected: expected.to_string(),
            found: found.to_string(),
        })
    }
}

/// File names inside the output directory.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Layout { root: root.into() }
    }

    pub fn graph(&self) -> PathBuf {
        self.root.join("graph.json")
    }

    pub fn split(&self) -> PathBuf {
        self.root.join("split.json")
    }

    pub fn labels(&self, source: LabelSource, split_seed: u64) -> PathBuf {
        self.root.join(format!("labels_{}_{split_seed}.json", source.as_str()))
    }

    pub fn labels_csv(&self, source: LabelSource, split_seed: u64) -> PathBuf {
        self.root.join(format!("labels_{}_{split_seed}.csv", source.as_str()))
    }

    pub fn ssd_curve(&self, source: LabelSource, split_seed: u64) -> PathBuf {
        self.root.join(format!("ssd_curve_{}_{split_seed}.csv", source.as_str()))
    }

    pub fn prior(&self, source: LabelSource, split_seed: u64) -> PathBuf {
        self.root.join(PriorCache::file_name(split_seed, source.as_str()))
    }

    pub fn heatmap(&self, source: LabelSource, split_seed: u64) -> PathBuf {
        self.root.join(format!("heatmap_{}_{split_seed}.csv", source.as_str()))
    }

    pub fn checkpoint(&self, mode: ModelMode) -> PathBuf {
        self.root.join(format!("checkpoint_{}.json", mode.as_str()))
    }

    pub fn train_log(&self, mode: ModelMode) -> PathBuf {
        self.root.join(format!("train_log_{}.csv", mode.as_str()))
    }

    pub fn completion_log(&self, mode: ModelMode) -> PathBuf {
        self.root.join(format!("train_log_{}_completion.csv", mode.as_str()))
    }

    pub fn report(&self, scorer: &str) -> PathBuf {
        self.root.join(format!("report_{scorer}.json"))
    }

    pub fn ranks(&self, scorer: &str) -> PathBuf {
        self.root.join(format!("ranks_{scorer}.csv"))
    }

    pub fn timings(&self, scorer: &str) -> PathBuf {
        self.root.join(format!("timings_{scorer}.json"))
    }

    pub fn bench_csv(&self) -> PathBuf {
        self.root.join("bench.csv")
    }

    pub fn bench_json(&self) -> PathBuf {
        self.root.join("bench.json")
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.json")
    }

    pub fn resolved_config(&self) -> PathBuf {
        self.root.join("config.toml")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub config_digest: String,
    pub seed: u64,
    /// File name (relative to the output directory) to SHA-256 of its bytes.
    pub files: BTreeMap<String, String>,
    /// Stage-specific facts such as the chosen `k` or a fitted slope.
    pub info: BTreeMap<String, serde_json::Value>,
}

/// Index of every stage run into one output directory, keyed like
/// `split` or `evaluate:cn`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub stages: BTreeMap<String, ManifestEntry>,
}

impl Manifest {
    pub fn load_or_default(path: &Path) -> Result<Self> {
        if path.is_file() {
            crate::io::read_json(path)
        } else {
            Ok(Manifest::default())
        }
    }

    /// Records `key`, hashing each of `files`, and rewrites the manifest.
    pub fn record(
        layout: &Layout,
        key: &str,
        config_digest: &str,
        seed: u64,
        files: &[PathBuf],
        info: BTreeMap<String, serde_json::Value>,
    ) -> Result<()> {
        let path = layout.manifest();
        let mut m = Manifest::load_or_default(&path)?;
        let mut hashed = BTreeMap::new();
        for f in files {
            let name = f
                .strip_prefix(&layout.root)
                .unwrap_or(f)
                .to_string_lossy()
                .into_owned();
            hashed.insert(name, file_digest(f)?);
        }
        m.stages.insert(
            key.to_string(),
            ManifestEntry {
                config_digest: config_digest.to_string(),
                seed,
                files: hashed,
                info,
            },
        );
        crate::io::write_json(&path, &m)
    }
}
