//! Reader for LevyHolt-style TSV: one entry per line, two comma-separated
//! `subject,predicate,object` triples and a label.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use super::{EntailmentPair, Relation, Split};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ColumnOrder {
    #[default]
    PremiseFirst,
    HypothesisFirst,
}

fn parse_relation(field: &str) -> Option<Relation> {
    let parts: Vec<&str> = field.split(',').collect();
    if parts.len() < 3 {
        return None;
    }
    let subject = parts[0];
    let object = parts[parts.len() - 1];
    let predicate = parts[1..parts.len() - 1].join(",");
    if subject.trim().is_empty() || predicate.trim().is_empty() || object.trim().is_empty() {
        return None;
    }
    Some(Relation::new(subject, &predicate, object))
}

fn parse_label(field: &str) -> Option<bool> {
    match field.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "y" | "entailment" => Some(true),
        "0" | "false" | "no" | "n" | "non-entailment" | "not_entailment" => Some(false),
        _ => None,
    }
}

/// Parses one split. Ids are `<split>:<line>`. Any malformed line is an
/// input-format error naming the line.
pub fn read_levyholt<R: BufRead>(r: R, split: Split, order: ColumnOrder) -> Result<Vec<EntailmentPair>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(Error::Stream)?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let bad = || {
            Error::InputFormat(format!(
                "{split} line {}: expected `triple<TAB>triple<TAB>label`",
                i + 1
            ))
        };
        if fields.len() != 3 {
            return Err(bad());
        }
        let first = parse_relation(fields[0]).ok_or_else(bad)?;
        let second = parse_relation(fields[1]).ok_or_else(bad)?;
        let label = parse_label(fields[2]).ok_or_else(bad)?;
        let (premise, hypothesis) = match order {
            ColumnOrder::PremiseFirst => (first, second),
            ColumnOrder::HypothesisFirst => (second, first),
        };
        out.push(EntailmentPair {
            id: format!("{split}:{}", i + 1),
            premise,
            hypothesis,
            label,
            converse_id: None,
            split,
        });
    }
    Ok(out)
}

pub fn read_levyholt_file(path: &Path, split: Split, order: ColumnOrder) -> Result<Vec<EntailmentPair>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_levyholt(BufReader::new(f), split, order)
}
