//! Corpus store: articles, relation triples, 3-day context windows and the
//! per-window argument-pair indexes that evidence retrieval and the
//! negative absence filter run against.

mod records;
mod store_dir;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{id_cmp, normalize_arg, predicate_key};

pub use records::{parse_date, read_articles, read_triples, Article, RejectKind, Rejected, Sentence, TripleRecord};
pub use store_dir::{INDEX_FORMAT, INDEX_VERSION};

pub const DEFAULT_WINDOW_SPAN_DAYS: u32 = 3;

/// (article_id, sentence_id).
pub type SentenceRef = (String, String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WindowId(pub u32);

impl fmt::Display for WindowId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Subject/object pair after argument normalization. Orientation is kept.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ArgPair {
    pub subject: String,
    pub object: String,
}

impl ArgPair {
    pub fn new(subject: &str, object: &str) -> Self {
        ArgPair {
            subject: normalize_arg(subject),
            object: normalize_arg(object),
        }
    }

    pub fn unordered(&self) -> UnorderedPair {
        UnorderedPair::new(&self.subject, &self.object)
    }
}

/// Orientation-free argument pair; the smaller argument comes first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UnorderedPair(pub String, pub String);

impl UnorderedPair {
    pub fn new(a: &str, b: &str) -> Self {
        let (a, b) = (normalize_arg(a), normalize_arg(b));
        if a <= b {
            UnorderedPair(a, b)
        } else {
            UnorderedPair(b, a)
        }
    }
}

impl From<&ArgPair> for UnorderedPair {
    fn from(p: &ArgPair) -> Self {
        p.unordered()
    }
}

impl From<ArgPair> for UnorderedPair {
    fn from(p: ArgPair) -> Self {
        p.unordered()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationTriple {
    pub subject: String,
    pub object: String,
    pub predicate: Vec<String>,
    pub article_id: String,
    pub sentence_id: String,
    pub window_id: WindowId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub typed_predicate: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subject_type: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object_type: Option<String>,
}

impl RelationTriple {
    pub fn predicate_key(&self) -> String {
        predicate_key(&self.predicate)
    }

    pub fn arg_pair(&self) -> ArgPair {
        ArgPair {
            subject: self.subject.clone(),
            object: self.object.clone(),
        }
    }

    pub fn sentence_ref(&self) -> SentenceRef {
        (self.article_id.clone(), self.sentence_id.clone())
    }

    /// Short-sentence rendering "subject predicate object".
    pub fn render(&self) -> String {
        format!("{} {} {}", self.subject, self.predicate.join(" "), self.object)
    }

    fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.window_id
            .cmp(&other.window_id)
            .then_with(|| id_cmp(&self.article_id, &other.article_id))
            .then_with(|| id_cmp(&self.sentence_id, &other.sentence_id))
            .then_with(|| self.subject.cmp(&other.subject))
            .then_with(|| self.predicate.cmp(&other.predicate))
            .then_with(|| self.object.cmp(&other.object))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextWindow {
    pub id: WindowId,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    pub article_ids: BTreeSet<String>,
    /// Unordered pair -> indexes into the store's triple table, in canonical order.
    #[serde(skip)]
    pub argpair_index: BTreeMap<UnorderedPair, Vec<usize>>,
}

impl ContextWindow {
    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start_date <= date && date <= self.end_date
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowPredicateCount {
    pub articles: usize,
    pub mentions: usize,
}

#[derive(Debug, Clone, Default)]
pub struct PredicateStats {
    argpairs: HashMap<String, usize>,
    mentions: HashMap<String, usize>,
    per_window: HashMap<(WindowId, String), WindowPredicateCount>,
}

impl PredicateStats {
    /// Distinct unordered argument pairs the predicate occurs with, corpus-wide.
    pub fn argpair_count(&self, predicate: &str) -> usize {
        self.argpairs.get(predicate).copied().unwrap_or(0)
    }

    pub fn mention_count(&self, predicate: &str) -> usize {
        self.mentions.get(predicate).copied().unwrap_or(0)
    }

    pub fn window_count(&self, window: WindowId, predicate: &str) -> WindowPredicateCount {
        self.per_window
            .get(&(window, predicate.to_string()))
            .copied()
            .unwrap_or_default()
    }

    pub fn predicates(&self) -> impl Iterator<Item = &str> {
        self.argpairs.keys().map(String::as_str)
    }
}

#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub window_span_days: u32,
    /// Articles to drop entirely, e.g. those used to induce the evaluated entailment graphs.
    pub excluded_articles: BTreeSet<String>,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            window_span_days: DEFAULT_WINDOW_SPAN_DAYS,
            excluded_articles: BTreeSet::new(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct IngestReport {
    pub articles: usize,
    pub triples: usize,
    pub windows: usize,
    pub duplicate_triples: usize,
    pub excluded_articles: usize,
    pub rejected: Vec<Rejected>,
}

/// Immutable corpus handle. Safe to share across reader threads.
#[derive(Debug, Clone)]
pub struct CorpusStore {
    span: u32,
    articles: Vec<Article>,
    article_index: HashMap<String, usize>,
    triples: Vec<RelationTriple>,
    windows: Vec<ContextWindow>,
    article_window: HashMap<String, WindowId>,
    stats: PredicateStats,
}

impl CorpusStore {
    /// Builds windows, argument-pair indexes and predicate statistics.
    ///
    /// Duplicate article ids are a hard error; triples that reference an
    /// unknown sentence or carry an empty predicate are rejected into the
    /// report. The result does not depend on input order.
    pub fn ingest(
        articles: Vec<Article>,
        triples: Vec<TripleRecord>,
        options: &IngestOptions,
    ) -> Result<(CorpusStore, IngestReport)> {
        if options.window_span_days == 0 {
            return Err(Error::InvalidArgument("window span must be at least 1 day".into()));
        }
        let mut report = IngestReport::default();

        let mut seen = HashSet::new();
        let mut kept = Vec::with_capacity(articles.len());
        for article in articles {
            if !seen.insert(article.article_id.clone()) {
                return Err(Error::DuplicateArticle(article.article_id));
            }
            if options.excluded_articles.contains(&article.article_id) {
                report.excluded_articles += 1;
                continue;
            }
            let mut sids = HashSet::new();
            if let Some(dup) = article.sentences.iter().find(|s| !sids.insert(s.sentence_id.as_str())) {
                report.rejected.push(Rejected {
                    kind: RejectKind::DuplicateSentence,
                    line: None,
                    detail: format!(
                        "article `{}` repeats sentence id `{}`",
                        article.article_id, dup.sentence_id
                    ),
                });
                continue;
            }
            kept.push(article);
        }
        kept.sort_by(|a, b| id_cmp(&a.article_id, &b.article_id));

        let span = options.window_span_days;
        let windows = build_windows(&kept, span);
        let epoch = windows.first().map(|w| w.start_date);
        let article_index: HashMap<String, usize> = kept
            .iter()
            .enumerate()
            .map(|(i, a)| (a.article_id.clone(), i))
            .collect();
        let mut article_window = HashMap::new();
        let mut windows = windows;
        for a in &kept {
            let w = window_of(epoch.expect("articles imply an epoch"), span, a.date);
            windows[w.0 as usize].article_ids.insert(a.article_id.clone());
            article_window.insert(a.article_id.clone(), w);
        }

        let mut out: Vec<RelationTriple> = Vec::with_capacity(triples.len());
        let mut dedup = HashSet::new();
        for t in triples {
            if options.excluded_articles.contains(&t.article_id) {
                continue;
            }
            let Some(&ai) = article_index.get(&t.article_id) else {
                report.rejected.push(Rejected {
                    kind: RejectKind::DanglingReference,
                    line: None,
                    detail: format!("triple references unknown article `{}`", t.article_id),
                });
                continue;
            };
            if !kept[ai].sentences.iter().any(|s| s.sentence_id == t.sentence_id) {
                report.rejected.push(Rejected {
                    kind: RejectKind::DanglingReference,
                    line: None,
                    detail: format!(
                        "triple references unknown sentence `{}` of article `{}`",
                        t.sentence_id, t.article_id
                    ),
                });
                continue;
            }
            let predicate: Vec<String> = t
                .predicate
                .iter()
                .flat_map(|p| p.split_whitespace())
                .map(str::to_lowercase)
                .collect();
            if predicate.is_empty() {
                report.rejected.push(Rejected {
                    kind: RejectKind::EmptyPredicate,
                    line: None,
                    detail: format!(
                        "empty predicate in article `{}` sentence `{}`",
                        t.article_id, t.sentence_id
                    ),
                });
                continue;
            }
            let triple = RelationTriple {
                subject: normalize_arg(&t.subject),
                object: normalize_arg(&t.object),
                predicate,
                window_id: article_window[&t.article_id],
                article_id: t.article_id,
                sentence_id: t.sentence_id,
                typed_predicate: t.typed_predicate,
                subject_type: t.subject_type.map(|s| normalize_arg(&s)),
                object_type: t.object_type.map(|s| normalize_arg(&s)),
            };
            let key = (
                triple.subject.clone(),
                triple.predicate.clone(),
                triple.object.clone(),
                triple.article_id.clone(),
                triple.sentence_id.clone(),
            );
            if !dedup.insert(key) {
                report.duplicate_triples += 1;
                continue;
            }
            out.push(triple);
        }

        let store = Self::assemble(span, kept, out, windows);
        report.articles = store.articles.len();
        report.triples = store.triples.len();
        report.windows = store.windows.len();
        Ok((store, report))
    }

    /// Sorts triples canonically and derives indexes and statistics.
    fn assemble(
        span: u32,
        articles: Vec<Article>,
        mut triples: Vec<RelationTriple>,
        mut windows: Vec<ContextWindow>,
    ) -> CorpusStore {
        triples.sort_by(RelationTriple::canonical_cmp);
        let article_index = articles
            .iter()
            .enumerate()
            .map(|(i, a)| (a.article_id.clone(), i))
            .collect();
        let mut article_window = HashMap::new();
        for w in &windows {
            for a in &w.article_ids {
                article_window.insert(a.clone(), w.id);
            }
        }

        let mut pairs_by_pred: HashMap<String, HashSet<UnorderedPair>> = HashMap::new();
        let mut mentions: HashMap<String, usize> = HashMap::new();
        let mut window_articles: HashMap<(WindowId, String), HashSet<&str>> = HashMap::new();
        let mut window_mentions: HashMap<(WindowId, String), usize> = HashMap::new();
        for (i, t) in triples.iter().enumerate() {
            let pair = t.arg_pair().unordered();
            let key = t.predicate_key();
            windows[t.window_id.0 as usize]
                .argpair_index
                .entry(pair.clone())
                .or_default()
                .push(i);
            pairs_by_pred.entry(key.clone()).or_default().insert(pair);
            *mentions.entry(key.clone()).or_default() += 1;
            window_articles
                .entry((t.window_id, key.clone()))
                .or_default()
                .insert(&t.article_id);
            *window_mentions.entry((t.window_id, key)).or_default() += 1;
        }
        let per_window = window_mentions
            .into_iter()
            .map(|(k, m)| {
                let articles = window_articles.get(&k).map_or(0, HashSet::len);
                (k, WindowPredicateCount { articles, mentions: m })
            })
            .collect();
        let stats = PredicateStats {
            argpairs: pairs_by_pred.into_iter().map(|(k, v)| (k, v.len())).collect(),
            mentions,
            per_window,
        };
        CorpusStore {
            span,
            articles,
            article_index,
            triples,
            windows,
            article_window,
            stats,
        }
    }

    pub fn window_span_days(&self) -> u32 {
        self.span
    }

    pub fn articles(&self) -> &[Article] {
        &self.articles
    }

    pub fn article(&self, article_id: &str) -> Option<&Article> {
        self.article_index.get(article_id).map(|&i| &self.articles[i])
    }

    pub fn sentence(&self, article_id: &str, sentence_id: &str) -> Option<&Sentence> {
        self.article(article_id)?
            .sentences
            .iter()
            .find(|s| s.sentence_id == sentence_id)
    }

    pub fn triples(&self) -> &[RelationTriple] {
        &self.triples
    }

    pub fn windows(&self) -> &[ContextWindow] {
        &self.windows
    }

    pub fn window(&self, id: WindowId) -> Result<&ContextWindow> {
        self.windows.get(id.0 as usize).ok_or(Error::UnknownWindow(id.0))
    }

    pub fn window_of_article(&self, article_id: &str) -> Option<WindowId> {
        self.article_window.get(article_id).copied()
    }

    pub fn stats(&self) -> &PredicateStats {
        &self.stats
    }

    /// Window triples mentioning the pair in either orientation, minus the
    /// excluded sentences, in (article, sentence) order and truncated to `cap`.
    pub fn evidence_for(
        &self,
        pair: impl Into<UnorderedPair>,
        window: WindowId,
        excluded: &HashSet<SentenceRef>,
        cap: usize,
    ) -> Result<Vec<&RelationTriple>> {
        let w = self.window(window)?;
        let pair = pair.into();
        let Some(idx) = w.argpair_index.get(&pair) else {
            return Ok(Vec::new());
        };
        Ok(idx
            .iter()
            .map(|&i| &self.triples[i])
            .filter(|t| excluded.is_empty() || !excluded.contains(&(t.article_id.clone(), t.sentence_id.clone())))
            .take(cap)
            .collect())
    }

    /// All window triples for the pair, without exclusion or cap.
    pub fn mentions(&self, pair: &UnorderedPair, window: WindowId) -> Result<Vec<&RelationTriple>> {
        let w = self.window(window)?;
        Ok(w.argpair_index
            .get(pair)
            .map(|idx| idx.iter().map(|&i| &self.triples[i]).collect())
            .unwrap_or_default())
    }

    pub fn predicate_argpair_count(&self, predicate: &str) -> usize {
        self.stats.argpair_count(&predicate_key(&[predicate]))
    }

    /// True iff any of the predicates occurs with the pair (either orientation) in the window.
    pub fn window_presence<S: AsRef<str>>(
        &self,
        predicates: &[S],
        pair: impl Into<UnorderedPair>,
        window: WindowId,
    ) -> Result<bool> {
        let w = self.window(window)?;
        if predicates.is_empty() {
            return Ok(false);
        }
        let wanted: HashSet<String> = predicates.iter().map(|p| predicate_key(&[p.as_ref()])).collect();
        let pair = pair.into();
        Ok(w.argpair_index
            .get(&pair)
            .is_some_and(|idx| idx.iter().any(|&i| wanted.contains(&self.triples[i].predicate_key()))))
    }

    /// Article text with the given sentences left out.
    pub fn article_text(&self, article_id: &str, excluded: &HashSet<SentenceRef>) -> Option<String> {
        let a = self.article(article_id)?;
        Some(
            a.sentences
                .iter()
                .filter(|s| !excluded.contains(&(a.article_id.clone(), s.sentence_id.clone())))
                .map(|s| s.text.as_str())
                .collect::<Vec<_>>()
                .join(" "),
        )
    }
}

fn window_of(epoch: NaiveDate, span: u32, date: NaiveDate) -> WindowId {
    let days = (date - epoch).num_days();
    debug_assert!(days >= 0);
    WindowId((days / i64::from(span)) as u32)
}

/// Windows anchored at the earliest article date, tiling up to the latest.
fn build_windows(articles: &[Article], span: u32) -> Vec<ContextWindow> {
    let (Some(min), Some(max)) = (
        articles.iter().map(|a| a.date).min(),
        articles.iter().map(|a| a.date).max(),
    ) else {
        return Vec::new();
    };
    let count = window_of(min, span, max).0 + 1;
    (0..count)
        .map(|i| {
            let start = min + Days::new(u64::from(i) * u64::from(span));
            ContextWindow {
                id: WindowId(i),
                start_date: start,
                end_date: start + Days::new(u64::from(span) - 1),
                article_ids: BTreeSet::new(),
                argpair_index: BTreeMap::new(),
            }
        })
        .collect()
}
