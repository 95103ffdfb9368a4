//! `results/<digest>/`: report, CSV tables, binaries and a manifest of
//! seeds and file digests.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub version: String,
    pub os: String,
    pub arch: String,
    pub threads: usize,
}

impl Environment {
    pub fn current() -> Self {
        Environment {
            version: env!("CARGO_PKG_VERSION").to_string(),
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
            threads: crate::sde::pool().current_num_threads(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub study: String,
    pub config_digest: String,
    /// `(ensemble label, seed)`.
    pub seeds: Vec<(String, u64)>,
    pub inputs: Vec<(String, String)>,
    /// `(file name, hex SHA-256)` of every artefact except the manifest.
    pub files: Vec<(String, String)>,
}

pub fn file_digest(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(std::fs::read(path)?)))
}

/// Single writer for one study's output directory.
#[derive(Debug)]
pub struct ResultsDir {
    root: PathBuf,
    files: Vec<String>,
}

impl ResultsDir {
    pub fn create(base: &Path, digest: &str) -> Result<Self> {
        let root = base.join(digest);
        std::fs::create_dir_all(&root)?;
        Ok(ResultsDir {
            root,
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Register `name` and return its path.
    pub fn file(&mut self, name: &str) -> PathBuf {
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        self.root.join(name)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let path = self.file(name);
        std::fs::write(path, serde_json::to_vec_pretty(value)?)?;
        Ok(())
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let path = self.file(name);
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Write the manifest over every registered file (sidecars included).
    pub fn finish(
        mut self,
        study: &str,
        config_digest: &str,
        seeds: Vec<(String, u64)>,
        inputs: Vec<(String, String)>,
    ) -> Result<Manifest> {
        let mut names = Vec::new();
        for f in &self.files {
            names.push(f.clone());
            let sidecar = format!("{f}.json");
            if self.root.join(&sidecar).exists() && !self.files.contains(&sidecar) {
                names.push(sidecar);
            }
        }
        let files = names
            .iter()
            .map(|n| Ok((n.clone(), file_digest(&self.root.join(n))?)))
            .collect::<Result<Vec<_>>>()?;
        let manifest = Manifest {
            study: study.to_string(),
            config_digest: config_digest.to_string(),
            seeds,
            inputs,
            files,
        };
        self.files.clear();
        let path = self.root.join("manifest.json");
        std::fs::write(path, serde_json::to_vec_pretty(&manifest)?)?;
        Ok(manifest)
    }
}
