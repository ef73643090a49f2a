//! Benchmark synthesis: starring argument pairs, positive propositions,
//! hyponym-substituted negatives, bundles and bucket-matched sampling.

mod output;
mod sampling;

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::SynthesisConfig;
use crate::corpus::{ArgPair, CorpusStore, SentenceRef, UnorderedPair, WindowId};
use crate::error::Result;
use crate::harness::Statement;
use crate::lexicon::{Lexicon, SpanMatch, SynsetStrategy};
use crate::text::{base_form, predicate_key};

pub use output::{audit_sample, read_dataset_jsonl, write_dataset_jsonl, AuditEntry};
pub use sampling::{
    largest_remainder, sample_dataset, split_by_time, Dataset, FrequencyBuckets, SampleDiagnostics, SampleParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proposition {
    pub proposition_id: String,
    pub bundle_id: String,
    pub label: Label,
    pub subject: String,
    pub object: String,
    pub predicate: Vec<String>,
    pub window_id: WindowId,
    pub parent_positive_id: Option<String>,
    /// For negatives, the parent's sentences.
    pub source_sentences: BTreeSet<SentenceRef>,
    /// Corpus-wide distinct argument pairs of the predicate.
    pub predicate_frequency: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub typed_predicate: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subject_type: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object_type: Option<String>,
}

impl Proposition {
    pub fn predicate_key(&self) -> String {
        predicate_key(&self.predicate)
    }

    pub fn arg_pair(&self) -> ArgPair {
        ArgPair {
            subject: self.subject.clone(),
            object: self.object.clone(),
        }
    }

    pub fn render(&self) -> String {
        format!("{} {} {}", self.subject, self.predicate.join(" "), self.object)
    }

    pub fn statement(&self) -> Statement {
        Statement {
            subject: self.subject.clone(),
            predicate: self.predicate.clone(),
            object: self.object.clone(),
            typed_predicate: self.typed_predicate.clone(),
            subject_type: self.subject_type.clone(),
            object_type: self.object_type.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bundle {
    pub bundle_id: String,
    pub positive: Proposition,
    pub negatives: Vec<Proposition>,
}

impl Bundle {
    pub fn window_id(&self) -> WindowId {
        self.positive.window_id
    }

    /// The positive followed by its negatives.
    pub fn propositions(&self) -> impl Iterator<Item = &Proposition> {
        std::iter::once(&self.positive).chain(self.negatives.iter())
    }
}

/// A hyponym-substituted predicate before filtering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NegativeCandidate {
    pub proposition: Proposition,
    /// Predicate keys that must all be absent with the pair in the window:
    /// the candidate itself plus every synonym substitution.
    pub variants: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterCounts {
    pub kept: usize,
    pub infelicitous: usize,
    pub present_in_window: usize,
}

impl std::ops::AddAssign for FilterCounts {
    fn add_assign(&mut self, o: Self) {
        self.kept += o.kept;
        self.infelicitous += o.infelicitous;
        self.present_in_window += o.present_in_window;
    }
}

pub(crate) fn digest(parts: &[&str]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0x1f]);
    }
    hex::encode(&h.finalize()[..8])
}

fn seed_for(seed: u64, id: &str) -> u64 {
    let d = Sha256::digest(id.as_bytes());
    seed ^ u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

/// Unordered pairs mentioned in at least `min_articles` distinct articles and
/// with at least `min_predicates` distinct predicates within the window. The
/// two counts are independent. Sorted.
pub fn select_starring_pairs(
    store: &CorpusStore,
    window: WindowId,
    min_articles: usize,
    min_predicates: usize,
) -> Result<Vec<UnorderedPair>> {
    let w = store.window(window)?;
    let triples = store.triples();
    Ok(w.argpair_index
        .iter()
        .filter(|(_, idx)| {
            let articles: BTreeSet<&str> = idx.iter().map(|&i| triples[i].article_id.as_str()).collect();
            if articles.len() < min_articles {
                return false;
            }
            let predicates: BTreeSet<String> = idx.iter().map(|&i| triples[i].predicate_key()).collect();
            predicates.len() >= min_predicates
        })
        .map(|(pair, _)| pair.clone())
        .collect())
}

/// One positive per oriented (pair, predicate) mention group whose predicate
/// is felicitous. Source sentences collect every window mention.
pub fn select_positives(
    store: &CorpusStore,
    window: WindowId,
    starring: &[UnorderedPair],
    min_argpairs: usize,
) -> Result<Vec<Proposition>> {
    struct Group {
        tokens: Vec<String>,
        sources: BTreeSet<SentenceRef>,
        typed: Option<String>,
        subject_type: Option<String>,
        object_type: Option<String>,
    }
    let mut out = Vec::new();
    for pair in starring {
        let mut groups: BTreeMap<(String, String, String), Group> = BTreeMap::new();
        for t in store.mentions(pair, window)? {
            let key = t.predicate_key();
            if store.stats().argpair_count(&key) < min_argpairs {
                continue;
            }
            let g = groups
                .entry((t.subject.clone(), key, t.object.clone()))
                .or_insert_with(|| Group {
                    tokens: t.predicate.clone(),
                    sources: BTreeSet::new(),
                    typed: None,
                    subject_type: None,
                    object_type: None,
                });
            g.sources.insert(t.sentence_ref());
            g.typed = g.typed.take().or_else(|| t.typed_predicate.clone());
            g.subject_type = g.subject_type.take().or_else(|| t.subject_type.clone());
            g.object_type = g.object_type.take().or_else(|| t.object_type.clone());
        }
        for ((subject, key, object), g) in groups {
            let id = digest(&["pos", &window.0.to_string(), &subject, &key, &object]);
            out.push(Proposition {
                bundle_id: id.clone(),
                proposition_id: id,
                label: Label::Positive,
                predicate_frequency: store.stats().argpair_count(&key),
                subject,
                object,
                predicate: g.tokens,
                window_id: window,
                parent_positive_id: None,
                source_sentences: g.sources,
                typed_predicate: g.typed,
                subject_type: g.subject_type,
                object_type: g.object_type,
            });
        }
    }
    Ok(out)
}

fn replace_span(tokens: &[String], span: &SpanMatch, lemma: &str) -> Vec<String> {
    let mut out: Vec<String> = tokens[..span.start].to_vec();
    out.extend(lemma.split_whitespace().map(str::to_string));
    out.extend_from_slice(&tokens[span.end..]);
    out
}

/// Rewrites a role form such as `(play.1,play.game.with.2)` by replacing the
/// first occurrence of `old` in each slot. None when no slot mentions it.
pub(crate) fn substitute_role_form(role_form: &str, old: &[String], new: &[String]) -> Option<String> {
    let inner = role_form.strip_prefix('(')?.strip_suffix(')')?;
    let old: Vec<String> = old.iter().map(|t| base_form(t)).collect();
    let new: Vec<String> = new
        .iter()
        .flat_map(|t| t.split_whitespace())
        .map(str::to_string)
        .collect();
    let mut changed = false;
    let slots: Vec<String> = inner
        .split(',')
        .map(|slot| {
            let mut parts: Vec<String> = slot.split('.').map(str::to_string).collect();
            let role = parts.pop().unwrap_or_default();
            let bases: Vec<String> = parts.iter().map(|p| base_form(p)).collect();
            if !old.is_empty() && old.len() <= bases.len() {
                if let Some(at) = (0..=bases.len() - old.len()).find(|&i| bases[i..i + old.len()] == old[..]) {
                    parts.splice(at..at + old.len(), new.iter().cloned());
                    changed = true;
                }
            }
            parts.push(role);
            parts.join(".")
        })
        .collect();
    changed.then(|| format!("({})", slots.join(",")))
}

/// Hyponym substitutions over every matched span of the positive predicate,
/// deduplicated by resulting predicate. Frequencies are filled in by
/// [`filter_negatives`].
/// Replacement tokens, substituted role form and the synonym-closed variants.
type CandidateParts = (Vec<String>, Option<String>, BTreeSet<String>);

pub fn generate_negative_candidates(
    positive: &Proposition,
    lexicon: &Lexicon,
    strategy: SynsetStrategy,
    transitive: bool,
    context: &str,
) -> Result<Vec<NegativeCandidate>> {
    let own = positive.predicate_key();
    let mut found: BTreeMap<String, CandidateParts> = BTreeMap::new();
    for span in lexicon.match_spans(&positive.predicate) {
        let synset = lexicon.select_synset(&span, context, strategy)?;
        for hypo in lexicon.hyponyms(&synset.id, transitive)? {
            let tokens = replace_span(&positive.predicate, &span, &hypo);
            let key = predicate_key(&tokens);
            if key == own {
                continue;
            }
            let entry = found.entry(key.clone()).or_insert_with(|| {
                let typed = positive.typed_predicate.as_deref().and_then(|rf| {
                    let hypo_tokens: Vec<String> = hypo.split_whitespace().map(str::to_string).collect();
                    substitute_role_form(rf, &positive.predicate[span.start..span.end], &hypo_tokens)
                });
                (tokens, typed, BTreeSet::new())
            });
            entry.2.insert(key.clone());
            for syn in lexicon.synonyms(&hypo) {
                entry
                    .2
                    .insert(predicate_key(&replace_span(&positive.predicate, &span, &syn)));
            }
            entry.2.extend(lexicon.synonyms(&key));
        }
    }
    let window = positive.window_id.0.to_string();
    Ok(found
        .into_iter()
        .map(|(key, (tokens, typed, variants))| NegativeCandidate {
            proposition: Proposition {
                proposition_id: digest(&["neg", &window, &positive.proposition_id, &key]),
                bundle_id: positive.bundle_id.clone(),
                label: Label::Negative,
                subject: positive.subject.clone(),
                object: positive.object.clone(),
                predicate: tokens,
                window_id: positive.window_id,
                parent_positive_id: Some(positive.proposition_id.clone()),
                source_sentences: positive.source_sentences.clone(),
                predicate_frequency: 0,
                typed_predicate: typed,
                subject_type: positive.subject_type.clone(),
                object_type: positive.object_type.clone(),
            },
            variants,
        })
        .collect())
}

/// Keeps felicitous candidates whose predicate and synonyms are all absent
/// with the argument pair in the window.
pub fn filter_negatives(
    store: &CorpusStore,
    candidates: Vec<NegativeCandidate>,
    min_argpairs: usize,
) -> Result<(Vec<Proposition>, FilterCounts)> {
    let mut counts = FilterCounts::default();
    let mut kept = Vec::new();
    for NegativeCandidate {
        mut proposition,
        variants,
    } in candidates
    {
        let freq = store.stats().argpair_count(&proposition.predicate_key());
        if freq < min_argpairs {
            counts.infelicitous += 1;
            continue;
        }
        let variants: Vec<&String> = variants.iter().collect();
        if store.window_presence(&variants, proposition.arg_pair(), proposition.window_id)? {
            counts.present_in_window += 1;
            continue;
        }
        proposition.predicate_frequency = freq;
        counts.kept += 1;
        kept.push(proposition);
    }
    Ok((kept, counts))
}

/// Pairs each positive with up to `max_negatives` of its surviving negatives,
/// chosen uniformly with a per-positive seed. Positives without survivors
/// yield no bundle. Output is sorted by (window, bundle id).
pub fn make_bundles(
    positives: &[Proposition],
    negatives: Vec<Proposition>,
    max_negatives: usize,
    seed: u64,
) -> Vec<Bundle> {
    let mut by_parent: BTreeMap<String, Vec<Proposition>> = BTreeMap::new();
    for n in negatives {
        if let Some(p) = n.parent_positive_id.clone() {
            by_parent.entry(p).or_default().push(n);
        }
    }
    let mut bundles: Vec<Bundle> = positives
        .iter()
        .filter_map(|pos| {
            let mut survivors = by_parent.remove(&pos.proposition_id)?;
            survivors.sort_by(|a, b| a.predicate.cmp(&b.predicate));
            survivors.dedup_by(|a, b| a.predicate == b.predicate);
            if survivors.is_empty() || max_negatives == 0 {
                return None;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed_for(seed, &pos.proposition_id));
            let mut chosen: Vec<Proposition> = survivors.choose_multiple(&mut rng, max_negatives).cloned().collect();
            chosen.sort_by(|a, b| a.predicate.cmp(&b.predicate));
            Some(Bundle {
                bundle_id: pos.bundle_id.clone(),
                positive: pos.clone(),
                negatives: chosen,
            })
        })
        .collect();
    bundles.sort_by(|a, b| (a.window_id(), &a.bundle_id).cmp(&(b.window_id(), &b.bundle_id)));
    bundles
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthesisStats {
    pub windows: usize,
    pub starring_pairs: usize,
    pub positives: usize,
    pub candidates: usize,
    pub filter: FilterCounts,
    pub bundles: usize,
    pub positives_without_negatives: usize,
}

/// Everything before sampling.
#[derive(Debug, Clone)]
pub struct Population {
    pub positives: Vec<Proposition>,
    /// Every surviving negative, before the per-positive cap.
    pub negatives: Vec<Proposition>,
    pub bundles: Vec<Bundle>,
    pub stats: SynthesisStats,
}

/// Runs starring selection through bundling over every window. Candidate
/// generation and filtering run in parallel per positive; the result does
/// not depend on the thread count.
pub fn build_population(store: &CorpusStore, lexicon: &Lexicon, cfg: &SynthesisConfig) -> Result<Population> {
    cfg.validate()?;
    let mut stats = SynthesisStats {
        windows: store.windows().len(),
        ..Default::default()
    };
    let mut positives = Vec::new();
    for w in store.windows() {
        let pairs = select_starring_pairs(store, w.id, cfg.min_articles, cfg.min_predicates)?;
        stats.starring_pairs += pairs.len();
        positives.extend(select_positives(store, w.id, &pairs, cfg.min_argpairs)?);
    }
    stats.positives = positives.len();

    let per_positive: Vec<(usize, Vec<Proposition>, FilterCounts)> = positives
        .par_iter()
        .map(|pos| {
            let context = pos
                .source_sentences
                .iter()
                .next()
                .and_then(|(a, s)| store.sentence(a, s))
                .map(|s| s.text.clone())
                .unwrap_or_else(|| pos.render());
            let candidates =
                generate_negative_candidates(pos, lexicon, cfg.synset_strategy, cfg.transitive_hyponyms, &context)?;
            let n = candidates.len();
            let (kept, counts) = filter_negatives(store, candidates, cfg.min_argpairs)?;
            Ok((n, kept, counts))
        })
        .collect::<Result<_>>()?;

    let mut negatives = Vec::new();
    for (n, kept, counts) in per_positive {
        stats.candidates += n;
        stats.filter += counts;
        negatives.extend(kept);
    }
    let bundles = make_bundles(&positives, negatives.clone(), cfg.max_negatives, cfg.seed);
    stats.bundles = bundles.len();
    stats.positives_without_negatives = positives.len() - bundles.len();
    Ok(Population {
        positives,
        negatives,
        bundles,
        stats,
    })
}
