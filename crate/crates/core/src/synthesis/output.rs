use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{digest, Bundle, Dataset, Label, Proposition};
use crate::error::{Error, Result};

/// One proposition per line, each bundle's positive before its negatives.
pub fn write_dataset_jsonl<W: Write>(dataset: &Dataset, mut w: W) -> Result<()> {
    for p in dataset.propositions() {
        serde_json::to_writer(&mut w, p).map_err(|e| Error::Stream(e.into()))?;
        w.write_all(b"\n").map_err(Error::Stream)?;
    }
    w.flush().map_err(Error::Stream)
}

/// Reads a dataset file back into bundles, checking that every negative
/// has its positive and shares its window and argument pair.
pub fn read_dataset_jsonl<R: BufRead>(r: R) -> Result<Dataset> {
    let mut positives: BTreeMap<String, Proposition> = BTreeMap::new();
    let mut negatives: Vec<(usize, Proposition)> = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(Error::Stream)?;
        if line.trim().is_empty() {
            continue;
        }
        let p: Proposition =
            serde_json::from_str(&line).map_err(|e| Error::InputFormat(format!("dataset line {}: {e}", i + 1)))?;
        match p.label {
            Label::Positive => {
                if p.source_sentences.is_empty() {
                    return Err(Error::InputFormat(format!(
                        "dataset line {}: positive without source sentences",
                        i + 1
                    )));
                }
                if positives.insert(p.proposition_id.clone(), p).is_some() {
                    return Err(Error::InputFormat(format!(
                        "dataset line {}: duplicate positive",
                        i + 1
                    )));
                }
            }
            Label::Negative => negatives.push((i + 1, p)),
        }
    }
    let mut members: BTreeMap<String, Vec<Proposition>> = BTreeMap::new();
    for (line, n) in negatives {
        let parent = n
            .parent_positive_id
            .as_ref()
            .and_then(|id| positives.get(id))
            .ok_or_else(|| Error::InputFormat(format!("dataset line {line}: negative without its positive")))?;
        if parent.window_id != n.window_id || parent.subject != n.subject || parent.object != n.object {
            return Err(Error::InputFormat(format!(
                "dataset line {line}: negative does not share its positive's window and arguments"
            )));
        }
        members.entry(parent.proposition_id.clone()).or_default().push(n);
    }
    let bundles = positives
        .into_values()
        .map(|positive| Bundle {
            bundle_id: positive.bundle_id.clone(),
            negatives: members.remove(&positive.proposition_id).unwrap_or_default(),
            positive,
        })
        .collect();
    Ok(Dataset::from_bundles(bundles))
}

/// A proposition prepared for manual felicitousness review, arguments masked
/// by their entity types.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub audit_id: String,
    pub text: String,
    pub proposition_id: String,
    pub label: Label,
}

impl AuditEntry {
    /// The reviewer-facing line, without label or id.
    pub fn sheet_json(&self) -> serde_json::Value {
        serde_json::json!({"audit_id": self.audit_id, "text": self.text})
    }
}

fn mask(t: &Option<String>) -> String {
    format!("[{}]", t.as_deref().unwrap_or("entity"))
}

/// Up to `per_label` positives and as many negatives, drawn with `seed`.
pub fn audit_sample(dataset: &Dataset, per_label: usize, seed: u64) -> Vec<AuditEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pos: Vec<&Proposition> = dataset.positives().collect();
    let neg: Vec<&Proposition> = dataset.negatives().collect();
    let mut picked: Vec<&Proposition> = pos.choose_multiple(&mut rng, per_label).copied().collect();
    picked.extend(neg.choose_multiple(&mut rng, per_label).copied());
    let mut out: Vec<AuditEntry> = picked
        .into_iter()
        .map(|p| AuditEntry {
            audit_id: digest(&["audit", &seed.to_string(), &p.proposition_id]),
            text: format!(
                "{} {} {}",
                mask(&p.subject_type),
                p.predicate.join(" "),
                mask(&p.object_type)
            ),
            proposition_id: p.proposition_id.clone(),
            label: p.label,
        })
        .collect();
    out.sort_by(|a, b| a.audit_id.cmp(&b.audit_id));
    out
}
