//! TF-IDF article ranking within one window: log-scaled term frequency,
//! smoothed idf over the window's articles, cosine similarity.

use std::collections::{HashMap, HashSet};

use crate::corpus::{CorpusStore, SentenceRef, WindowId};
use crate::error::Result;
use crate::text::id_cmp;

/// Lower-cased alphanumeric runs; CJK ideographs count as one token each.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in text.chars() {
        if is_cjk(c) {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
            out.push(c.to_string());
        } else if c.is_alphanumeric() {
            cur.extend(c.to_lowercase());
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn is_cjk(c: char) -> bool {
    matches!(c, '\u{4e00}'..='\u{9fff}' | '\u{3400}'..='\u{4dbf}' | '\u{f900}'..='\u{faff}')
}

pub type SparseVec = HashMap<String, f64>;

fn term_counts(text: &str) -> HashMap<String, usize> {
    let mut tf = HashMap::new();
    for t in tokenize(text) {
        *tf.entry(t).or_insert(0) += 1;
    }
    tf
}

fn norm(v: &SparseVec) -> f64 {
    v.values().map(|x| x * x).sum::<f64>().sqrt()
}

/// Cosine similarity; 0 when either vector is empty.
pub fn cosine(a: &SparseVec, b: &SparseVec) -> f64 {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let dot: f64 = small.iter().filter_map(|(t, x)| large.get(t).map(|y| x * y)).sum();
    let n = norm(a) * norm(b);
    if n == 0.0 {
        0.0
    } else {
        dot / n
    }
}

#[derive(Debug, Clone)]
pub struct WindowTfidf {
    docs: usize,
    df: HashMap<String, usize>,
    /// Article ids in id order with their full-text vectors.
    vectors: Vec<(String, SparseVec)>,
}

impl WindowTfidf {
    pub fn build(store: &CorpusStore, window: WindowId) -> Result<WindowTfidf> {
        let w = store.window(window)?;
        let mut ids: Vec<&String> = w.article_ids.iter().collect();
        ids.sort_by(|a, b| id_cmp(a, b));
        let none = HashSet::new();
        let counts: Vec<(String, HashMap<String, usize>)> = ids
            .into_iter()
            .map(|id| {
                let text = store.article_text(id, &none).unwrap_or_default();
                (id.clone(), term_counts(&text))
            })
            .collect();
        let mut df: HashMap<String, usize> = HashMap::new();
        for (_, tf) in &counts {
            for t in tf.keys() {
                *df.entry(t.clone()).or_insert(0) += 1;
            }
        }
        let mut index = WindowTfidf {
            docs: counts.len(),
            df,
            vectors: Vec::new(),
        };
        index.vectors = counts.iter().map(|(id, tf)| (id.clone(), index.weigh(tf))).collect();
        Ok(index)
    }

    pub fn idf(&self, term: &str) -> f64 {
        let df = self.df.get(term).copied().unwrap_or(0) as f64;
        ((1.0 + self.docs as f64) / (1.0 + df)).ln() + 1.0
    }

    fn weigh(&self, tf: &HashMap<String, usize>) -> SparseVec {
        tf.iter()
            .map(|(t, &c)| (t.clone(), (1.0 + (c as f64).ln()) * self.idf(t)))
            .collect()
    }

    pub fn vectorize(&self, text: &str) -> SparseVec {
        self.weigh(&term_counts(text))
    }

    /// Top `k` articles by similarity to `query`, ties broken by article id.
    /// Articles touching `excluded` are scored on their text without those
    /// sentences (idf stays that of the full window). Zero-similarity
    /// articles are never returned.
    pub fn top_k(
        &self,
        store: &CorpusStore,
        query: &str,
        k: usize,
        excluded: &HashSet<SentenceRef>,
    ) -> Vec<(String, f64)> {
        let q = self.vectorize(query);
        let touched: HashSet<&str> = excluded.iter().map(|(a, _)| a.as_str()).collect();
        let mut scored: Vec<(String, f64)> = self
            .vectors
            .iter()
            .map(|(id, v)| {
                let s = if touched.contains(id.as_str()) {
                    let text = store.article_text(id, excluded).unwrap_or_default();
                    cosine(&q, &self.vectorize(&text))
                } else {
                    cosine(&q, v)
                };
                (id.clone(), s)
            })
            .filter(|(_, s)| *s > 0.0)
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| id_cmp(&a.0, &b.0)));
        scored.truncate(k);
        scored
    }
}
