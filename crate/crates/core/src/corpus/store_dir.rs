//! On-disk corpus index: a directory holding a versioned manifest plus the
//! normalized article, window and triple tables. Loading skips validation
//! and window assignment and only rebuilds the in-memory indexes.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{Article, ContextWindow, CorpusStore, RelationTriple};
use crate::error::{Error, Result};

pub const INDEX_FORMAT: &str = "booqa-corpus-index";
pub const INDEX_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct IndexManifest {
    format: String,
    version: u32,
    window_span_days: u32,
    articles: usize,
    triples: usize,
    windows: usize,
    files: IndexFiles,
}

#[derive(Debug, Serialize, Deserialize)]
struct IndexFiles {
    articles: String,
    windows: String,
    triples: String,
}

fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, &item).map_err(|e| Error::InputFormat(format!("{}: {e}", path.display())))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| Error::InputFormat(format!("{}:{}: {e}", path.display(), i + 1)))?,
        );
    }
    Ok(out)
}

impl CorpusStore {
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let files = IndexFiles {
            articles: "articles.jsonl".into(),
            windows: "windows.jsonl".into(),
            triples: "triples.jsonl".into(),
        };
        write_jsonl(&dir.join(&files.articles), &self.articles)?;
        write_jsonl(&dir.join(&files.windows), &self.windows)?;
        write_jsonl(&dir.join(&files.triples), &self.triples)?;
        let manifest = IndexManifest {
            format: INDEX_FORMAT.into(),
            version: INDEX_VERSION,
            window_span_days: self.span,
            articles: self.articles.len(),
            triples: self.triples.len(),
            windows: self.windows.len(),
            files,
        };
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: &Path) -> Result<CorpusStore> {
        let path = dir.join("manifest.json");
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let manifest: IndexManifest =
            serde_json::from_str(&text).map_err(|e| Error::InputFormat(format!("{}: {e}", path.display())))?;
        if manifest.format != INDEX_FORMAT || manifest.version != INDEX_VERSION {
            return Err(Error::InputFormat(format!(
                "unsupported index {} v{} (expected {INDEX_FORMAT} v{INDEX_VERSION})",
                manifest.format, manifest.version
            )));
        }
        let articles: Vec<Article> = read_jsonl(&dir.join(&manifest.files.articles))?;
        let windows: Vec<ContextWindow> = read_jsonl(&dir.join(&manifest.files.windows))?;
        let triples: Vec<RelationTriple> = read_jsonl(&dir.join(&manifest.files.triples))?;
        if articles.len() != manifest.articles || windows.len() != manifest.windows || triples.len() != manifest.triples
        {
            return Err(Error::InputFormat(format!(
                "index at {} does not match its manifest counts",
                dir.display()
            )));
        }
        if let Some(t) = triples.iter().find(|t| windows.get(t.window_id.0 as usize).is_none()) {
            return Err(Error::InputFormat(format!(
                "triple in article `{}` references missing window {}",
                t.article_id, t.window_id
            )));
        }
        Ok(CorpusStore::assemble(
            manifest.window_span_days,
            articles,
            triples,
            windows,
        ))
    }
}
