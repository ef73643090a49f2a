//! JSONL input records for articles and pre-extracted relation triples.

use std::io::BufRead;

use chrono::{DateTime, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Article and sentence ids may be written as strings or integers.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum RawId {
    Str(String),
    Int(i64),
}

impl From<RawId> for String {
    fn from(id: RawId) -> Self {
        match id {
            RawId::Str(s) => s,
            RawId::Int(n) => n.to_string(),
        }
    }
}

#[derive(Debug, Deserialize)]
struct RawSentence {
    sentence_id: RawId,
    text: String,
}

#[derive(Debug, Deserialize)]
struct RawArticle {
    article_id: RawId,
    date: String,
    #[serde(default)]
    sentences: Vec<RawSentence>,
}

#[derive(Debug, Deserialize)]
struct RawTriple {
    article_id: RawId,
    sentence_id: RawId,
    subject: String,
    predicate: Vec<String>,
    object: String,
    #[serde(default)]
    typed_predicate: Option<String>,
    #[serde(default)]
    subject_type: Option<String>,
    #[serde(default)]
    object_type: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub sentence_id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Article {
    pub article_id: String,
    pub date: NaiveDate,
    pub sentences: Vec<Sentence>,
}

/// A triple as read from input, before it is assigned to a window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripleRecord {
    pub article_id: String,
    pub sentence_id: String,
    pub subject: String,
    pub predicate: Vec<String>,
    pub object: String,
    pub typed_predicate: Option<String>,
    pub subject_type: Option<String>,
    pub object_type: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectKind {
    MalformedRecord,
    UnparseableDate,
    DuplicateSentence,
    DanglingReference,
    EmptyPredicate,
}

/// A record dropped during reading or ingestion, with a diagnostic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejected {
    pub kind: RejectKind,
    pub line: Option<usize>,
    pub detail: String,
}

/// Parses an ISO-8601 calendar date, also accepting a full timestamp.
pub fn parse_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .or_else(|| DateTime::parse_from_rfc3339(s).ok().map(|d| d.date_naive()))
        .or_else(|| {
            chrono::NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S")
                .ok()
                .map(|d| d.date())
        })
}

pub fn read_articles<R: BufRead>(reader: R) -> Result<(Vec<Article>, Vec<Rejected>)> {
    let mut articles = Vec::new();
    let mut rejected = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = Some(i + 1);
        let raw: RawArticle = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                rejected.push(Rejected {
                    kind: RejectKind::MalformedRecord,
                    line: lineno,
                    detail: e.to_string(),
                });
                continue;
            }
        };
        let article_id = String::from(raw.article_id);
        let Some(date) = parse_date(&raw.date) else {
            rejected.push(Rejected {
                kind: RejectKind::UnparseableDate,
                line: lineno,
                detail: format!("article `{article_id}`: date `{}`", raw.date),
            });
            continue;
        };
        articles.push(Article {
            article_id,
            date,
            sentences: raw
                .sentences
                .into_iter()
                .map(|s| Sentence {
                    sentence_id: s.sentence_id.into(),
                    text: s.text,
                })
                .collect(),
        });
    }
    Ok((articles, rejected))
}

pub fn read_triples<R: BufRead>(reader: R) -> Result<(Vec<TripleRecord>, Vec<Rejected>)> {
    let mut triples = Vec::new();
    let mut rejected = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<RawTriple>(&line) {
            Ok(raw) => triples.push(TripleRecord {
                article_id: raw.article_id.into(),
                sentence_id: raw.sentence_id.into(),
                subject: raw.subject,
                predicate: raw.predicate,
                object: raw.object,
                typed_predicate: raw.typed_predicate,
                subject_type: raw.subject_type,
                object_type: raw.object_type,
            }),
            Err(e) => rejected.push(Rejected {
                kind: RejectKind::MalformedRecord,
                line: Some(i + 1),
                detail: e.to_string(),
            }),
        }
    }
    Ok((triples, rejected))
}
