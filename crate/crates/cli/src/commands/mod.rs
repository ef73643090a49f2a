pub mod evaluate;
pub mod mesh;
pub mod pipeline;
pub mod report;

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use booqa::config::RunConfig;
use booqa::manifest::RunManifest;
use booqa::synthesis::{read_dataset_jsonl, write_dataset_jsonl, Dataset};
use serde::Serialize;

/// Bad flag combination or value; exit code 1.
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

/// The external scorer failed on some or all requests; exit code 3.
#[derive(Debug)]
pub struct ScorerFailed(pub String);

impl std::fmt::Display for ScorerFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ScorerFailed {}

/// Config file contents (defaults when absent) and the text hashed into manifests.
pub fn load_config(path: Option<&Path>) -> anyhow::Result<(RunConfig, String)> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Ok((RunConfig::from_toml_str(&text)?, text))
        }
        None => {
            let cfg = RunConfig::default();
            let text = cfg.to_toml_string();
            Ok((cfg, text))
        }
    }
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn write_jsonl<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> anyhow::Result<()> {
    let mut w = create(path)?;
    for row in rows {
        serde_json::to_writer(&mut w, &row)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_dataset(path: &Path, dataset: &Dataset) -> anyhow::Result<()> {
    let mut w = create(path)?;
    write_dataset_jsonl(dataset, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> anyhow::Result<Dataset> {
    let f = File::open(path).map_err(|e| booqa::Error::io(path, e))?;
    read_dataset_jsonl(BufReader::new(f)).with_context(|| format!("reading {}", path.display()))
}

/// `dir/stem.suffix` next to `path`, e.g. `out.positives.jsonl` for `out.jsonl`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

pub fn finish(manifest: &RunManifest, artifacts: &[&Path]) -> anyhow::Result<()> {
    for a in artifacts {
        let sidecar = manifest.write_sidecar(a)?;
        log::info!("wrote {} (manifest {})", a.display(), sidecar.display());
    }
    Ok(())
}
