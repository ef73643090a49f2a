//! Flat TOML run configuration.

use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::SynsetStrategy;

pub const DEFAULT_BUCKET_BOUNDARIES: [u64; 20] = [
    60, 100, 300, 500, 700, 1000, 1500, 2000, 2500, 3000, 4000, 5000, 6000, 8000, 10000, 15000, 20000, 30000, 50000,
    100000,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthesisConfig {
    pub window_span_days: u32,
    /// Distinct articles a starring pair needs within its window.
    pub min_articles: usize,
    /// Distinct predicates a starring pair needs within its window.
    pub min_predicates: usize,
    /// Corpus-wide distinct argument pairs a predicate needs to count as felicitous.
    pub min_argpairs: usize,
    pub max_negatives: usize,
    pub synset_strategy: SynsetStrategy,
    pub transitive_hyponyms: bool,
    pub max_span: usize,
    pub bucket_boundaries: Vec<u64>,
    /// Relative overshoot allowed on each negative bucket quota.
    pub bucket_slack: f64,
    pub target_positives: usize,
    pub seed: u64,
    pub boundary_date: Option<NaiveDate>,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig {
            window_span_days: 3,
            min_articles: 15,
            min_predicates: 15,
            min_argpairs: 30,
            max_negatives: 2,
            synset_strategy: SynsetStrategy::First,
            transitive_hyponyms: false,
            max_span: 4,
            bucket_boundaries: DEFAULT_BUCKET_BOUNDARIES.to_vec(),
            bucket_slack: 0.05,
            target_positives: 21_773,
            seed: 0,
            boundary_date: None,
        }
    }
}

impl SynthesisConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.window_span_days == 0 {
            return bad("window_span_days must be at least 1");
        }
        if self.min_articles == 0 || self.min_predicates == 0 {
            return bad("starring thresholds must be at least 1");
        }
        if self.max_span == 0 {
            return bad("max_span must be at least 1");
        }
        if !self.bucket_boundaries.windows(2).all(|w| w[0] < w[1]) {
            return bad("bucket_boundaries must be strictly ascending");
        }
        if !(self.bucket_slack >= 0.0 && self.bucket_slack.is_finite()) {
            return bad("bucket_slack must be a non-negative number");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RetrievalMode {
    #[default]
    Relation,
    Sentence,
    Tfidf,
}

impl std::str::FromStr for RetrievalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relation" => Ok(RetrievalMode::Relation),
            "sentence" => Ok(RetrievalMode::Sentence),
            "tfidf" | "tfidf_articles" => Ok(RetrievalMode::Tfidf),
            other => Err(Error::InvalidArgument(format!("unknown retrieval mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for RetrievalMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RetrievalMode::Relation => "relation",
            RetrievalMode::Sentence => "sentence",
            RetrievalMode::Tfidf => "tfidf",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub evidence_cap: usize,
    pub retrieval: RetrievalMode,
    pub tfidf_k: usize,
    /// Drop each hypothesis's own source sentences from its evidence.
    pub exclude_sources: bool,
    /// Worker threads; 0 means the rayon default.
    pub jobs: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            evidence_cap: 3200,
            retrieval: RetrievalMode::Relation,
            tfidf_k: 5,
            exclude_sources: true,
            jobs: 0,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.evidence_cap == 0 {
            return Err(Error::InvalidArgument("evidence_cap must be at least 1".into()));
        }
        if self.tfidf_k == 0 {
            return Err(Error::InvalidArgument("tfidf_k must be at least 1".into()));
        }
        Ok(())
    }
}

/// Both sections of a config file; either may be omitted.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub synthesis: SynthesisConfig,
    pub eval: EvalConfig,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::InputFormat(format!("config: {e}")))?;
        cfg.synthesis.validate()?;
        cfg.eval.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
