use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scorer::{Evidence, Scorer, ScoringItem, Statement};
use super::tfidf::WindowTfidf;
use crate::config::{EvalConfig, RetrievalMode};
use crate::corpus::{CorpusStore, SentenceRef, WindowId};
use crate::error::{Error, Result};
use crate::metrics::{zero_evidence_rank, AucReport};
use crate::synthesis::{Dataset, Label, Proposition};

/// Evidence for one hypothesis under the configured retrieval mode.
pub struct Retriever<'a> {
    store: &'a CorpusStore,
    config: EvalConfig,
    tfidf: BTreeMap<WindowId, WindowTfidf>,
}

impl<'a> Retriever<'a> {
    /// Builds TF-IDF indexes for `windows` when the mode needs them.
    pub fn new(
        store: &'a CorpusStore,
        config: &EvalConfig,
        windows: impl IntoIterator<Item = WindowId>,
    ) -> Result<Self> {
        config.validate()?;
        let tfidf = if config.retrieval == RetrievalMode::Tfidf {
            let ids: BTreeSet<WindowId> = windows.into_iter().collect();
            ids.into_par_iter()
                .map(|w| Ok((w, WindowTfidf::build(store, w)?)))
                .collect::<Result<BTreeMap<_, _>>>()?
        } else {
            BTreeMap::new()
        };
        Ok(Retriever {
            store,
            config: config.clone(),
            tfidf,
        })
    }

    pub fn exclusion_for(&self, hypothesis: &Proposition) -> HashSet<SentenceRef> {
        if self.config.exclude_sources {
            hypothesis.source_sentences.iter().cloned().collect()
        } else {
            HashSet::new()
        }
    }

    pub fn retrieve(&self, hypothesis: &Proposition) -> Result<Vec<Evidence>> {
        let excluded = self.exclusion_for(hypothesis);
        let cap = self.config.evidence_cap;
        let window = hypothesis.window_id;
        match self.config.retrieval {
            RetrievalMode::Relation => Ok(self
                .store
                .evidence_for(hypothesis.arg_pair(), window, &excluded, cap)?
                .into_iter()
                .map(|t| Evidence::Relation {
                    statement: Statement::from(t),
                    article_id: t.article_id.clone(),
                    sentence_id: t.sentence_id.clone(),
                })
                .collect()),
            RetrievalMode::Sentence => {
                let mut seen = HashSet::new();
                let mut out = Vec::new();
                for t in self
                    .store
                    .evidence_for(hypothesis.arg_pair(), window, &excluded, usize::MAX)?
                {
                    if out.len() >= cap {
                        break;
                    }
                    if !seen.insert(t.sentence_ref()) {
                        continue;
                    }
                    let text = self
                        .store
                        .sentence(&t.article_id, &t.sentence_id)
                        .map(|s| s.text.clone())
                        .unwrap_or_else(|| t.render());
                    out.push(Evidence::Sentence {
                        article_id: t.article_id.clone(),
                        sentence_id: t.sentence_id.clone(),
                        text,
                    });
                }
                Ok(out)
            }
            RetrievalMode::Tfidf => {
                self.store.window(window)?;
                let index = match self.tfidf.get(&window) {
                    Some(i) => i,
                    None => return Err(Error::UnknownWindow(window.0)),
                };
                Ok(index
                    .top_k(
                        self.store,
                        &hypothesis.render(),
                        self.config.tfidf_k.min(cap),
                        &excluded,
                    )
                    .into_iter()
                    .map(|(article_id, _)| Evidence::Article {
                        text: self.store.article_text(&article_id, &excluded).unwrap_or_default(),
                        article_id,
                    })
                    .collect())
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HypothesisScore {
    /// Max over scored evidence; `None` when nothing was scored.
    pub confidence: Option<f64>,
    pub evidence: usize,
    pub scored: usize,
    pub abstained: usize,
    pub failed: usize,
}

/// Max aggregation of premise-to-hypothesis scores over `evidence`.
///
/// Abstentions and non-finite outputs are not scores. A failing batch is
/// skipped with a diagnostic; the remaining batches still count.
pub fn score_hypothesis(hypothesis: &Statement, evidence: &[Evidence], scorer: &dyn Scorer) -> HypothesisScore {
    let mut out = HypothesisScore {
        evidence: evidence.len(),
        ..Default::default()
    };
    let batch = scorer.capabilities().max_batch.max(1);
    for chunk in evidence.chunks(batch) {
        let items: Vec<ScoringItem<'_>> = chunk
            .iter()
            .map(|premise| ScoringItem { premise, hypothesis })
            .collect();
        match scorer.score_batch(&items) {
            Ok(scores) if scores.len() == items.len() => {
                for s in scores {
                    match s {
                        Some(v) if v.is_finite() => {
                            out.scored += 1;
                            out.confidence = Some(out.confidence.map_or(v, |c: f64| c.max(v)));
                        }
                        Some(v) => {
                            log::warn!("scorer {} returned non-finite score {v}; ignored", scorer.id());
                            out.failed += 1;
                        }
                        None => out.abstained += 1,
                    }
                }
            }
            Ok(scores) => {
                log::warn!(
                    "scorer {} returned {} scores for {} items; batch skipped",
                    scorer.id(),
                    scores.len(),
                    items.len()
                );
                out.failed += items.len();
            }
            Err(e) => {
                log::warn!("scorer {} failed on a batch of {}: {e}", scorer.id(), items.len());
                out.failed += items.len();
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisResult {
    pub proposition_id: String,
    pub bundle_id: String,
    pub label: Label,
    #[serde(flatten)]
    pub score: HypothesisScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub scorer: String,
    pub config: EvalConfig,
    pub report: AucReport,
    /// Fraction of hypotheses with at least one scored evidence.
    pub coverage: f64,
    pub hypotheses: usize,
    pub positives: usize,
    /// Hypotheses whose every evidence item failed in the scorer.
    pub scorer_failures: usize,
    pub elapsed_ms: u128,
    pub results: Vec<HypothesisResult>,
}

impl EvalResult {
    pub fn max_recall(&self) -> f64 {
        self.report.max_recall
    }
}

/// Fails before any scoring when the dataset refers to windows or
/// sentences the corpus does not have.
pub fn check_dataset(store: &CorpusStore, dataset: &Dataset) -> Result<()> {
    for p in dataset.propositions() {
        store.window(p.window_id).map_err(|_| {
            Error::CorpusMismatch(format!(
                "{} refers to unknown window {}",
                p.proposition_id, p.window_id.0
            ))
        })?;
        if let Some((a, s)) = p.source_sentences.iter().find(|(a, s)| store.sentence(a, s).is_none()) {
            return Err(Error::CorpusMismatch(format!(
                "{} cites sentence ({a}, {s}) absent from the corpus",
                p.proposition_id
            )));
        }
    }
    Ok(())
}

/// Scores every hypothesis of the dataset and computes the metric report.
/// Results come back in dataset order whatever the thread count.
pub fn run_eval(
    store: &CorpusStore,
    dataset: &Dataset,
    scorer: &dyn Scorer,
    config: &EvalConfig,
) -> Result<EvalResult> {
    let start = Instant::now();
    check_dataset(store, dataset)?;
    let hypotheses: Vec<&Proposition> = dataset.propositions().collect();
    let retriever = Retriever::new(store, config, hypotheses.iter().map(|p| p.window_id))?;

    let work = || {
        hypotheses
            .par_iter()
            .map(|p| {
                let evidence = retriever.retrieve(p)?;
                Ok(HypothesisResult {
                    proposition_id: p.proposition_id.clone(),
                    bundle_id: p.bundle_id.clone(),
                    label: p.label,
                    score: score_hypothesis(&p.statement(), &evidence, scorer),
                })
            })
            .collect::<Result<Vec<_>>>()
    };
    let results = if config.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(work)?
    } else {
        work()?
    };

    let entries: Vec<(Option<f64>, bool)> = results
        .iter()
        .map(|r| (r.score.confidence, r.label.is_positive()))
        .collect();
    let report = AucReport::compute(&zero_evidence_rank(&entries)?)?;
    let covered = results.iter().filter(|r| r.score.confidence.is_some()).count();
    let scorer_failures = results
        .iter()
        .filter(|r| r.score.failed > 0 && r.score.scored == 0 && r.score.abstained == 0)
        .count();
    Ok(EvalResult {
        scorer: scorer.id().to_string(),
        config: config.clone(),
        coverage: if results.is_empty() {
            0.0
        } else {
            covered as f64 / results.len() as f64
        },
        hypotheses: results.len(),
        positives: entries.iter().filter(|e| e.1).count(),
        scorer_failures,
        elapsed_ms: start.elapsed().as_millis(),
        report,
        results,
    })
}
