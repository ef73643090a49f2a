#![allow(dead_code, unused_imports)]

mod oracle;
pub mod stub;
pub use oracle::*;

use std::collections::BTreeSet;

use booqa::corpus::{Article, CorpusStore, IngestOptions, Sentence, TripleRecord};
use booqa::lexicon::Lexicon;
use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn date(s: &str) -> NaiveDate {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
}

pub fn article(id: &str, day: &str, sentences: usize) -> Article {
    Article {
        article_id: id.to_string(),
        date: date(day),
        sentences: (0..sentences)
            .map(|i| Sentence {
                sentence_id: i.to_string(),
                text: format!("sentence {i} of article {id}"),
            })
            .collect(),
    }
}

pub fn triple(a: &str, s: &str, subject: &str, predicate: &str, object: &str) -> TripleRecord {
    TripleRecord {
        article_id: a.to_string(),
        sentence_id: s.to_string(),
        subject: subject.to_string(),
        predicate: predicate.split_whitespace().map(str::to_string).collect(),
        object: object.to_string(),
        typed_predicate: None,
        subject_type: None,
        object_type: None,
    }
}

pub fn store(articles: Vec<Article>, triples: Vec<TripleRecord>) -> CorpusStore {
    let (store, report) = CorpusStore::ingest(articles, triples, &IngestOptions::default()).unwrap();
    assert!(report.rejected.is_empty(), "{:?}", report.rejected);
    store
}

pub const LEXICON_JSON: &str = r#"{"synsets": [
  {"id": "v.play", "lemmas": ["play"], "hyponyms": ["v.foul", "v.replay"]},
  {"id": "v.play2", "lemmas": ["play", "act"], "hyponyms": ["v.mime"]},
  {"id": "v.foul", "lemmas": ["foul"]},
  {"id": "v.replay", "lemmas": ["replay"]},
  {"id": "v.mime", "lemmas": ["mime"]},
  {"id": "n.game", "lemmas": ["game"], "hyponyms": ["n.practice_game"]},
  {"id": "n.practice_game", "lemmas": ["practice_game", "scrimmage"]},
  {"id": "v.go", "lemmas": ["go", "travel"], "hyponyms": ["v.drive", "v.walk"]},
  {"id": "v.drive", "lemmas": ["drive", "motor"]},
  {"id": "v.walk", "lemmas": ["walk"]},
  {"id": "v.meet", "lemmas": ["meet", "encounter"], "hyponyms": ["v.interview"]},
  {"id": "v.interview", "lemmas": ["interview"]},
  {"id": "v.beat", "lemmas": ["beat", "defeat"], "hyponyms": ["v.rout", "v.edge"]},
  {"id": "v.rout", "lemmas": ["rout", "trounce"]},
  {"id": "v.edge", "lemmas": ["edge"]},
  {"id": "v.buy", "lemmas": ["buy", "purchase"], "hyponyms": ["v.order"]},
  {"id": "v.order", "lemmas": ["order"]}
]}"#;

pub fn lexicon() -> Lexicon {
    Lexicon::from_json_str(LEXICON_JSON).unwrap()
}

pub const VOCAB: &[&str] = &[
    "play game with",
    "foul game with",
    "replay game with",
    "play practice game with",
    "play scrimmage with",
    "go to",
    "drive to",
    "walk to",
    "travel to",
    "motor to",
    "meet with",
    "interview with",
    "encounter",
    "beat",
    "defeat",
    "rout",
    "edge",
    "trounce",
    "buy from",
    "purchase from",
    "order from",
    "talk to",
    "sign with",
];

pub const ENTITIES: &[&str] = &["arsenal", "chelsea", "liverpool", "everton", "john", "mary"];

/// At most 45 articles over 15 days and at most 300 triples.
pub fn generated_corpus(seed: u64) -> (Vec<Article>, Vec<TripleRecord>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = date("2020-01-01");
    let days = rng.random_range(6..=15);
    let pairs: Vec<(usize, usize)> = (0..5)
        .map(|_| {
            let a = rng.random_range(0..ENTITIES.len());
            let mut b = rng.random_range(0..ENTITIES.len());
            while b == a {
                b = rng.random_range(0..ENTITIES.len());
            }
            (a, b)
        })
        .collect();
    let mut articles = Vec::new();
    let mut triples = Vec::new();
    let mut seen = BTreeSet::new();
    for day in 0..days {
        for k in 0..3 {
            let id = format!("a{day}-{k}");
            let n = rng.random_range(1..=3);
            let mut art = article(&id, &(start + chrono::Days::new(day)).to_string(), n);
            art.date = start + chrono::Days::new(day);
            for s in 0..n {
                for _ in 0..rng.random_range(1..=3) {
                    if triples.len() >= 300 {
                        break;
                    }
                    let (a, b) = pairs[rng.random_range(0..pairs.len())];
                    let (a, b) = if rng.random_bool(0.3) { (b, a) } else { (a, b) };
                    let pred = VOCAB[rng.random_range(0..VOCAB.len())];
                    if seen.insert((id.clone(), s, a, b, pred)) {
                        triples.push(triple(&id, &s.to_string(), ENTITIES[a], pred, ENTITIES[b]));
                    }
                }
            }
            articles.push(art);
        }
    }
    (articles, triples)
}

use booqa::corpus::WindowId;
use booqa::synthesis::{Bundle, Label, Proposition};

pub fn proposition(id: &str, label: Label, window: u32, pred: &str, freq: usize, parent: Option<&str>) -> Proposition {
    Proposition {
        proposition_id: id.to_string(),
        bundle_id: parent.unwrap_or(id).to_string(),
        label,
        subject: "s".into(),
        object: "o".into(),
        predicate: pred.split_whitespace().map(str::to_string).collect(),
        window_id: WindowId(window),
        parent_positive_id: parent.map(str::to_string),
        source_sentences: [("a".to_string(), "0".to_string())].into(),
        predicate_frequency: freq,
        typed_predicate: None,
        subject_type: None,
        object_type: None,
    }
}

/// Ten windows of uneven size and `n` bundles whose negatives are skewed
/// towards higher frequencies than their positives.
pub fn sampling_population(n: usize, seed: u64) -> (CorpusStore, Vec<Bundle>) {
    let mut arts = Vec::new();
    for w in 0..10u64 {
        for k in 0..(w % 4 + 1) * 3 {
            let day = date("2021-03-01") + chrono::Days::new(w * 3);
            let mut a = article(&format!("w{w}-{k}"), "2021-03-01", 1);
            a.date = day;
            arts.push(a);
        }
    }
    let store = store(arts, Vec::new());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let log_uniform = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| (rng.random_range(lo.ln()..hi.ln())).exp() as usize;
    let bundles = (0..n)
        .map(|i| {
            let w = rng.random_range(0..10u32);
            let id = format!("p{i:06}");
            let positive = proposition(
                &id,
                Label::Positive,
                w,
                &format!("pred {i}"),
                log_uniform(&mut rng, 30.0, 50_000.0),
                None,
            );
            let negatives = (0..rng.random_range(1..=2))
                .map(|k| {
                    proposition(
                        &format!("{id}-n{k}"),
                        Label::Negative,
                        w,
                        &format!("neg {i} {k}"),
                        log_uniform(&mut rng, 30.0, 2_000_000.0),
                        Some(&id),
                    )
                })
                .collect();
            Bundle {
                bundle_id: id,
                positive,
                negatives,
            }
        })
        .collect();
    (store, bundles)
}

/// Generated corpus with its full (unsampled) bundle population as a dataset.
pub fn eval_fixture(seed: u64) -> (CorpusStore, booqa::synthesis::Dataset) {
    let (articles, triples) = generated_corpus(seed);
    let st = store(articles, triples);
    let cfg = booqa::config::SynthesisConfig {
        min_articles: 2,
        min_predicates: 2,
        min_argpairs: 2,
        ..Default::default()
    };
    let pop = booqa::synthesis::build_population(&st, &lexicon(), &cfg).unwrap();
    (st, booqa::synthesis::Dataset::from_bundles(pop.bundles))
}

/// Deterministic pseudo-scorer: a hash of premise and hypothesis text, with
/// roughly one abstention in seven.
pub struct HashScorer;

impl booqa::harness::Scorer for HashScorer {
    fn id(&self) -> &str {
        "hash"
    }

    fn capabilities(&self) -> booqa::harness::Capabilities {
        booqa::harness::Capabilities {
            max_batch: 3,
            symmetric: false,
        }
    }

    fn score_batch(&self, items: &[booqa::harness::ScoringItem<'_>]) -> booqa::Result<Vec<Option<f64>>> {
        use sha2::{Digest, Sha256};
        Ok(items
            .iter()
            .map(|i| {
                let h = Sha256::digest(format!("{}\u{1f}{}", i.premise.text(), i.hypothesis.render()));
                let v = u32::from_be_bytes([h[0], h[1], h[2], h[3]]);
                (v % 7 != 0).then(|| (v % 1000) as f64 / 1000.0)
            })
            .collect())
    }
}
