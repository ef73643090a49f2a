//! Provenance sidecars written next to every produced artifact.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, Read};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const TOOL: &str = "booqa";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Digest of a file, or of every file below a directory in path order.
pub fn sha256_path(path: &Path) -> Result<String> {
    let mut h = Sha256::new();
    let mut files = Vec::new();
    collect_files(path, &mut files)?;
    files.sort();
    for f in files {
        if path.is_dir() {
            let rel = f.strip_prefix(path).unwrap_or(&f);
            h.update(rel.to_string_lossy().as_bytes());
            h.update([0]);
        }
        let mut file = File::open(&f).map_err(|e| Error::io(&f, e))?;
        let mut buf = [0u8; 1 << 16];
        loop {
            let n = file.read(&mut buf).map_err(|e| Error::io(&f, e))?;
            if n == 0 {
                break;
            }
            h.update(&buf[..n]);
        }
    }
    Ok(hex::encode(h.finalize()))
}

fn collect_files(path: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let meta = fs::metadata(path).map_err(|e| Error::io(path, e))?;
    if meta.is_file() {
        out.push(path.to_path_buf());
        return Ok(());
    }
    for entry in fs::read_dir(path).map_err(|e| Error::io(path, e))? {
        let entry = entry.map_err(|e| Error::io(path, e))?;
        collect_files(&entry.path(), out)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_hash: String,
    pub seed: Option<u64>,
    /// Input name to sha256.
    pub inputs: BTreeMap<String, String>,
    pub timings_ms: BTreeMap<String, u128>,
}

impl RunManifest {
    pub fn new(command: &str, config_text: &str, seed: Option<u64>) -> Self {
        RunManifest {
            tool: TOOL.into(),
            version: VERSION.into(),
            command: command.into(),
            config_hash: sha256_hex(config_text.as_bytes()),
            seed,
            inputs: BTreeMap::new(),
            timings_ms: BTreeMap::new(),
        }
    }

    pub fn add_input(&mut self, name: &str, path: &Path) -> Result<()> {
        self.inputs.insert(name.to_string(), sha256_path(path)?);
        Ok(())
    }

    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = std::time::Instant::now();
        let out = f();
        self.timings_ms.insert(stage.to_string(), start.elapsed().as_millis());
        out
    }

    /// Path of the sidecar for `artifact`.
    pub fn sidecar_path(artifact: &Path) -> PathBuf {
        let mut name = artifact.file_name().map(|n| n.to_os_string()).unwrap_or_default();
        name.push(".manifest.json");
        artifact.with_file_name(name)
    }

    pub fn write_sidecar(&self, artifact: &Path) -> Result<PathBuf> {
        let path = Self::sidecar_path(artifact);
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Stream(io::Error::other(e)))?;
        fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    pub fn read_sidecar(artifact: &Path) -> Result<RunManifest> {
        let path = Self::sidecar_path(artifact);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::InputFormat(format!("{}: {e}", path.display())))
    }

    /// Equal up to timings.
    pub fn same_run(&self, other: &RunManifest) -> bool {
        self.tool == other.tool
            && self.version == other.version
            && self.command == other.command
            && self.config_hash == other.config_hash
            && self.seed == other.seed
            && self.inputs == other.inputs
    }
}
