//! WordNet-style lexical database: span matching over predicate tokens,
//! hyponym and synonym enumeration, and pluggable synset selection.

mod wordnet;

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{base_form, normalize_arg};

pub use wordnet::load_wordnet_dir;

pub const DEFAULT_MAX_SPAN: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Synset {
    pub id: String,
    /// Space-separated, case-folded lemmas.
    pub lemmas: Vec<String>,
    #[serde(default)]
    pub hyponyms: Vec<String>,
}

/// A contiguous token span `[start, end)` that matched one or more lemmas.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanMatch {
    pub start: usize,
    pub end: usize,
    pub lemma: String,
    /// Candidate synset ids, most common sense first.
    pub synsets: Vec<String>,
}

impl SpanMatch {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SynsetStrategy {
    /// The sense-rank-1 synset.
    #[default]
    First,
    /// Delegate to the registered disambiguator.
    External,
}

impl FromStr for SynsetStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first" => Ok(SynsetStrategy::First),
            "external" => Ok(SynsetStrategy::External),
            other => Err(Error::InvalidArgument(format!("unknown synset strategy `{other}`"))),
        }
    }
}

impl fmt::Display for SynsetStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SynsetStrategy::First => "first",
            SynsetStrategy::External => "external",
        })
    }
}

/// Word-sense disambiguation hook.
pub trait Disambiguator: Send + Sync {
    /// Returns the id of the chosen candidate.
    fn choose(&self, span: &str, context: &str, candidates: &[&Synset]) -> Result<String>;

    /// Implementations that tolerate concurrent calls opt out of serialization.
    fn concurrency_safe(&self) -> bool {
        false
    }
}

#[derive(Clone)]
struct DisambiguatorSlot {
    inner: Arc<dyn Disambiguator>,
    guard: Arc<Mutex<()>>,
}

#[derive(Deserialize)]
struct JsonLexicon {
    synsets: Vec<Synset>,
}

#[derive(Clone)]
pub struct Lexicon {
    synsets: Vec<Synset>,
    by_id: HashMap<String, usize>,
    by_lemma: HashMap<String, Vec<usize>>,
    exceptions: HashMap<String, Vec<String>>,
    max_span: usize,
    disambiguator: Option<DisambiguatorSlot>,
}

impl fmt::Debug for Lexicon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Lexicon")
            .field("synsets", &self.synsets.len())
            .field("lemmas", &self.by_lemma.len())
            .field("max_span", &self.max_span)
            .field("disambiguator", &self.disambiguator.is_some())
            .finish()
    }
}

pub(crate) fn normalize_lemma(lemma: &str) -> String {
    normalize_arg(&lemma.replace('_', " "))
}

impl Lexicon {
    /// Builds a lexicon from synsets listed in sense order: a lemma's rank is
    /// the order in which the synsets containing it appear.
    pub fn from_synsets(synsets: Vec<Synset>) -> Result<Lexicon> {
        Self::with_exceptions(synsets, HashMap::new())
    }

    pub(crate) fn with_exceptions(
        mut synsets: Vec<Synset>,
        exceptions: HashMap<String, Vec<String>>,
    ) -> Result<Lexicon> {
        let mut by_id = HashMap::with_capacity(synsets.len());
        for (i, s) in synsets.iter_mut().enumerate() {
            let mut seen = HashSet::new();
            s.lemmas = s
                .lemmas
                .iter()
                .map(|l| normalize_lemma(l))
                .filter(|l| !l.is_empty() && seen.insert(l.clone()))
                .collect();
            if s.lemmas.is_empty() {
                return Err(Error::InputFormat(format!("synset `{}` has no lemmas", s.id)));
            }
            if by_id.insert(s.id.clone(), i).is_some() {
                return Err(Error::InputFormat(format!("duplicate synset id `{}`", s.id)));
            }
        }
        for s in &synsets {
            if let Some(h) = s.hyponyms.iter().find(|h| !by_id.contains_key(*h)) {
                return Err(Error::InputFormat(format!(
                    "synset `{}` lists unknown hyponym `{h}`",
                    s.id
                )));
            }
        }
        let mut by_lemma: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, s) in synsets.iter().enumerate() {
            for l in &s.lemmas {
                by_lemma.entry(l.clone()).or_default().push(i);
            }
        }
        let lexicon = Lexicon {
            synsets,
            by_id,
            by_lemma,
            exceptions,
            max_span: DEFAULT_MAX_SPAN,
            disambiguator: None,
        };
        lexicon.check_acyclic()?;
        Ok(lexicon)
    }

    /// Fixture format: `{"synsets":[{"id","lemmas":[...],"hyponyms":[...]}]}`.
    pub fn from_json_str(text: &str) -> Result<Lexicon> {
        let parsed: JsonLexicon =
            serde_json::from_str(text).map_err(|e| Error::InputFormat(format!("lexicon json: {e}")))?;
        Self::from_synsets(parsed.synsets)
    }

    /// Loads a JSON lexicon file or a WordNet dictionary directory.
    pub fn load(path: &Path) -> Result<Lexicon> {
        if path.is_dir() {
            load_wordnet_dir(path)
        } else {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            Self::from_json_str(&text)
        }
    }

    pub fn with_max_span(mut self, max_span: usize) -> Self {
        self.max_span = max_span.max(1);
        self
    }

    pub fn max_span(&self) -> usize {
        self.max_span
    }

    pub fn register_disambiguator(&mut self, d: Arc<dyn Disambiguator>) {
        self.disambiguator = Some(DisambiguatorSlot {
            inner: d,
            guard: Arc::new(Mutex::new(())),
        });
    }

    pub fn len(&self) -> usize {
        self.synsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.synsets.is_empty()
    }

    pub fn synsets(&self) -> &[Synset] {
        &self.synsets
    }

    pub fn synset(&self, id: &str) -> Result<&Synset> {
        self.by_id
            .get(id)
            .map(|&i| &self.synsets[i])
            .ok_or_else(|| Error::UnknownSynset(id.to_string()))
    }

    /// Synsets containing the exact (normalized) lemma, most common sense first.
    pub fn synsets_for(&self, lemma: &str) -> Vec<&Synset> {
        self.by_lemma
            .get(&normalize_lemma(lemma))
            .map(|v| v.iter().map(|&i| &self.synsets[i]).collect())
            .unwrap_or_default()
    }

    pub fn contains_lemma(&self, lemma: &str) -> bool {
        self.by_lemma.contains_key(&normalize_lemma(lemma))
    }

    /// 1-based sense rank of `synset_id` among the senses of `lemma`.
    pub fn sense_rank(&self, lemma: &str, synset_id: &str) -> Option<usize> {
        let idx = *self.by_id.get(synset_id)?;
        self.by_lemma
            .get(&normalize_lemma(lemma))?
            .iter()
            .position(|&i| i == idx)
            .map(|p| p + 1)
    }

    fn token_forms(&self, token: &str) -> Vec<String> {
        let surface = token.to_lowercase();
        let mut forms = vec![surface.clone()];
        if let Some(bases) = self.exceptions.get(&surface) {
            forms.extend(bases.iter().cloned());
        }
        forms.push(base_form(token));
        let mut seen = HashSet::new();
        forms.retain(|f| seen.insert(f.clone()));
        forms
    }

    /// Lemma keys a token span may normalize to, surface forms first.
    fn span_keys(&self, tokens: &[String]) -> Vec<String> {
        let mut keys = vec![String::new()];
        for (i, t) in tokens.iter().enumerate() {
            let forms = self.token_forms(t);
            keys = keys
                .iter()
                .flat_map(|prefix| {
                    forms
                        .iter()
                        .map(move |f| if i == 0 { f.clone() } else { format!("{prefix} {f}") })
                })
                .collect();
        }
        keys
    }

    /// Every contiguous span (up to the max span length) whose normalized
    /// join names a lemma, left to right and longest first.
    pub fn match_spans<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<SpanMatch> {
        let tokens: Vec<String> = tokens.iter().map(|t| t.as_ref().trim().to_lowercase()).collect();
        let mut out = Vec::new();
        for start in 0..tokens.len() {
            let longest = self.max_span.min(tokens.len() - start);
            for len in (1..=longest).rev() {
                let span = &tokens[start..start + len];
                let mut lemma = None;
                let mut synsets = Vec::new();
                for key in self.span_keys(span) {
                    if let Some(ids) = self.by_lemma.get(&key) {
                        lemma.get_or_insert(key);
                        for &i in ids {
                            let id = &self.synsets[i].id;
                            if !synsets.contains(id) {
                                synsets.push(id.clone());
                            }
                        }
                    }
                }
                if let Some(lemma) = lemma {
                    out.push(SpanMatch {
                        start,
                        end: start + len,
                        lemma,
                        synsets,
                    });
                }
            }
        }
        out
    }

    /// Hyponym lemmas of a synset: direct ones, or the full closure when
    /// `transitive` is set. Breadth-first, duplicates dropped.
    pub fn hyponyms(&self, synset_id: &str, transitive: bool) -> Result<Vec<String>> {
        let root = self.synset(synset_id)?;
        let mut lemmas = Vec::new();
        let mut seen_lemmas = HashSet::new();
        let mut visited: HashSet<&str> = HashSet::from([root.id.as_str()]);
        let mut queue: VecDeque<&str> = root.hyponyms.iter().map(String::as_str).collect();
        while let Some(id) = queue.pop_front() {
            if !visited.insert(id) {
                continue;
            }
            let s = self.synset(id)?;
            for l in &s.lemmas {
                if seen_lemmas.insert(l.clone()) {
                    lemmas.push(l.clone());
                }
            }
            if transitive {
                queue.extend(s.hyponyms.iter().map(String::as_str));
            }
        }
        Ok(lemmas)
    }

    /// Lemmas sharing a synset with `lemma`, the lemma itself included.
    pub fn synonyms(&self, lemma: &str) -> BTreeSet<String> {
        let norm = normalize_lemma(lemma);
        let tokens: Vec<String> = norm.split(' ').map(String::from).collect();
        let mut out = BTreeSet::from([norm.clone()]);
        if let Some(key) = self
            .span_keys(&tokens)
            .into_iter()
            .find(|k| self.by_lemma.contains_key(k))
        {
            for &i in &self.by_lemma[&key] {
                out.extend(self.synsets[i].lemmas.iter().cloned());
            }
        }
        out
    }

    /// Picks one synset for a span match. The result is always one of the
    /// match's candidates.
    pub fn select_synset(&self, span: &SpanMatch, context: &str, strategy: SynsetStrategy) -> Result<&Synset> {
        let first = span
            .synsets
            .first()
            .ok_or_else(|| Error::InvalidArgument("span match has no synsets".into()))?;
        if span.synsets.len() == 1 {
            return self.synset(first);
        }
        match strategy {
            SynsetStrategy::First => self.synset(first),
            SynsetStrategy::External => {
                let slot = self.disambiguator.as_ref().ok_or(Error::NoDisambiguator)?;
                let candidates = span
                    .synsets
                    .iter()
                    .map(|id| self.synset(id))
                    .collect::<Result<Vec<_>>>()?;
                let chosen = if slot.inner.concurrency_safe() {
                    slot.inner.choose(&span.lemma, context, &candidates)?
                } else {
                    let _lock = slot.guard.lock().unwrap_or_else(|p| p.into_inner());
                    slot.inner.choose(&span.lemma, context, &candidates)?
                };
                if !span.synsets.contains(&chosen) {
                    return Err(Error::InvalidArgument(format!(
                        "disambiguator chose `{chosen}`, which is not a candidate of `{}`",
                        span.lemma
                    )));
                }
                self.synset(&chosen)
            }
        }
    }

    fn check_acyclic(&self) -> Result<()> {
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state = vec![0u8; self.synsets.len()];
        for root in 0..self.synsets.len() {
            if state[root] != 0 {
                continue;
            }
            let mut stack = vec![(root, 0usize)];
            state[root] = 1;
            while let Some(top) = stack.last_mut() {
                let (node, next) = *top;
                let hypos = &self.synsets[node].hyponyms;
                if next < hypos.len() {
                    top.1 += 1;
                    let child = self.by_id[&hypos[next]];
                    match state[child] {
                        0 => {
                            state[child] = 1;
                            stack.push((child, 0));
                        }
                        1 => return Err(Error::HyponymCycle(self.synsets[child].id.clone())),
                        _ => {}
                    }
                } else {
                    state[node] = 2;
                    stack.pop();
                }
            }
        }
        Ok(())
    }
}
