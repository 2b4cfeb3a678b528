//! Artifact writing: atomic file replacement, content hashes and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("artifact");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.with_context(|| format!("writing {}", path.display()))
}

#[derive(Debug, Clone, Serialize)]
pub struct Artifact {
    pub path: String,
    pub schema: String,
    pub sha256: String,
}

/// Collects every artifact of a run; all writes go through this single writer.
#[derive(Debug)]
pub struct Output {
    dir: PathBuf,
    artifacts: Vec<Artifact>,
    runtimes: BTreeMap<String, f64>,
}

impl Output {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: dir.into(),
            artifacts: Vec::new(),
            runtimes: BTreeMap::new(),
        }
    }

    pub fn write(&mut self, name: &str, schema: &str, bytes: &[u8]) -> anyhow::Result<PathBuf> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes)?;
        self.artifacts.push(Artifact {
            path: name.into(),
            schema: schema.into(),
            sha256: sha256_hex(bytes),
        });
        Ok(path)
    }

    /// CSV with a header row; `schema` names the column layout and its version.
    pub fn csv<R, I>(&mut self, name: &str, schema: &str, header: &[String], rows: I) -> anyhow::Result<PathBuf>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = String>,
    {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("csv buffer: {e}"))?;
        self.write(name, schema, &bytes)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, schema: &str, value: &T) -> anyhow::Result<PathBuf> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(name, schema, &bytes)
    }

    pub fn runtime(&mut self, key: &str, seconds: f64) {
        self.runtimes.insert(key.into(), seconds);
    }

    /// Writes `manifest.json`. The timestamp and runtimes live only here, so every other
    /// artifact is byte-identical across runs with the same configuration.
    pub fn finish(mut self, command: &[String], config: &impl Serialize, seed: u64, status: &str) -> anyhow::Result<PathBuf> {
        let manifest = json!({
            "tool": "wfgem",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "seed": seed,
            "config": config,
            "status": status,
            "timestamp": chrono::Utc::now().to_rfc3339(),
            "runtimes_s": self.runtimes,
            "artifacts": self.artifacts,
        });
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        let path = self.dir.join("manifest.json");
        write_atomic(&path, &bytes)?;
        self.artifacts.clear();
        Ok(path)
    }
}

/// Short stable hash of a JSON value, used to key report rows by their parameters.
pub fn params_hash(v: &impl Serialize) -> String {
    let bytes = serde_json::to_vec(v).unwrap_or_default();
    sha256_hex(&bytes)[..16].to_string()
}

pub fn fmt(v: f64) -> String {
    format!("{v}")
}
