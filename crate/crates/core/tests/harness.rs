mod common;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::Arc;

use booqa::config::{EvalConfig, RetrievalMode};
use booqa::corpus::{Article, Sentence, WindowId};
use booqa::graph::{EntailmentGraph, LookupMode, TypedPredicate};
use booqa::harness::tfidf::WindowTfidf;
use booqa::harness::{check_dataset, run_eval, ConstantScorer, Evidence, Retriever, Scorer, ScoringItem};
use booqa::synthesis::{Dataset, Label};
use common::{eval_fixture, HashScorer};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn config(retrieval: RetrievalMode) -> EvalConfig {
    EvalConfig {
        retrieval,
        ..EvalConfig::default()
    }
}

#[test]
fn retrieval_never_leaks_source_sentences() {
    for seed in 0..8 {
        let (st, d) = eval_fixture(seed);
        for mode in [RetrievalMode::Relation, RetrievalMode::Sentence, RetrievalMode::Tfidf] {
            let cfg = config(mode);
            let r = Retriever::new(&st, &cfg, d.propositions().map(|p| p.window_id)).unwrap();
            for p in d.propositions() {
                let window = st.window(p.window_id).unwrap();
                for ev in r.retrieve(p).unwrap() {
                    assert!(window.article_ids.contains(ev.article_id()));
                    if let Some(s) = ev.sentence_id() {
                        assert!(!p
                            .source_sentences
                            .contains(&(ev.article_id().to_string(), s.to_string())));
                    }
                    match &ev {
                        Evidence::Relation { statement, .. } => {
                            let args = [statement.subject.as_str(), statement.object.as_str()];
                            assert!(args.contains(&p.subject.as_str()) && args.contains(&p.object.as_str()));
                        }
                        Evidence::Article { article_id, text } => {
                            for (a, s) in &p.source_sentences {
                                if a == article_id {
                                    let hidden = &st.sentence(a, s).unwrap().text;
                                    assert!(!text.contains(hidden.as_str()), "{hidden} leaked");
                                }
                            }
                        }
                        Evidence::Sentence { .. } => {}
                    }
                }
            }
        }
    }
}

#[test]
fn evidence_cap_is_respected() {
    let (st, d) = eval_fixture(1);
    let cfg = EvalConfig {
        evidence_cap: 2,
        ..config(RetrievalMode::Relation)
    };
    let r = Retriever::new(&st, &cfg, d.propositions().map(|p| p.window_id)).unwrap();
    let uncapped = Retriever::new(
        &st,
        &config(RetrievalMode::Relation),
        d.propositions().map(|p| p.window_id),
    )
    .unwrap();
    let mut hit = false;
    for p in d.propositions() {
        let (a, b) = (r.retrieve(p).unwrap(), uncapped.retrieve(p).unwrap());
        assert_eq!(a.len(), b.len().min(2));
        hit |= b.len() > 2;
    }
    assert!(hit);
    assert!(Retriever::new(
        &st,
        &EvalConfig {
            evidence_cap: 0,
            ..EvalConfig::default()
        },
        []
    )
    .is_err());
}

fn oracle_tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Independent smoothed TF-IDF ranking with dense vectors.
fn oracle_rank(docs: &[(String, String)], query: &str, k: usize) -> Vec<(String, f64)> {
    let n = docs.len() as f64;
    let mut vocab: Vec<String> = docs
        .iter()
        .flat_map(|(_, t)| oracle_tokens(t))
        .chain(oracle_tokens(query))
        .collect();
    vocab.sort();
    vocab.dedup();
    let df = |term: &str| {
        docs.iter()
            .filter(|(_, t)| oracle_tokens(t).iter().any(|x| x == term))
            .count() as f64
    };
    let idf: Vec<f64> = vocab.iter().map(|t| ((1.0 + n) / (1.0 + df(t))).ln() + 1.0).collect();
    let vector = |text: &str| -> Vec<f64> {
        let toks = oracle_tokens(text);
        vocab
            .iter()
            .zip(&idf)
            .map(|(t, w)| {
                let c = toks.iter().filter(|x| *x == t).count() as f64;
                if c == 0.0 {
                    0.0
                } else {
                    (1.0 + c.ln()) * w
                }
            })
            .collect()
    };
    let q = vector(query);
    let qn = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut out: Vec<(String, f64)> = docs
        .iter()
        .map(|(id, t)| {
            let v = vector(t);
            let dot: f64 = v.iter().zip(&q).map(|(a, b)| a * b).sum();
            let vn = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            (id.clone(), if vn * qn == 0.0 { 0.0 } else { dot / (vn * qn) })
        })
        .filter(|(_, s)| *s > 0.0)
        .collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    out.truncate(k);
    out
}

#[test]
fn tfidf_matches_brute_force() {
    let words = [
        "arsenal", "chelsea", "beat", "match", "goal", "league", "coach", "fans", "the", "cup", "won", "lost",
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for round in 0..20 {
        let docs: Vec<(String, String)> = (0..10)
            .map(|i| {
                let len = rng.random_range(3..25);
                let text: Vec<&str> = (0..len).map(|_| words[rng.random_range(0..words.len())]).collect();
                (format!("d{i}"), text.join(" "))
            })
            .collect();
        let articles = docs
            .iter()
            .map(|(id, text)| Article {
                article_id: id.clone(),
                date: common::date("2020-05-01"),
                sentences: vec![Sentence {
                    sentence_id: "0".into(),
                    text: text.clone(),
                }],
            })
            .collect();
        let st = common::store(articles, Vec::new());
        let index = WindowTfidf::build(&st, WindowId(0)).unwrap();
        let query = format!(
            "{} {} {}",
            words[round % 12],
            words[(round * 5 + 1) % 12],
            words[(round * 7 + 3) % 12]
        );
        let got = index.top_k(&st, &query, 5, &HashSet::new());
        let want = oracle_rank(&docs, &query, 5);
        assert_eq!(got.len(), want.len());
        for ((gi, gs), (wi, ws)) in got.iter().zip(&want) {
            assert_eq!(gi, wi, "round {round}");
            assert!((gs - ws).abs() < 1e-9);
        }
        // excluding a document's only sentence removes it from the ranking
        let hidden: HashSet<_> = [(want[0].0.clone(), "0".to_string())].into();
        assert!(index
            .top_k(&st, &query, 10, &hidden)
            .iter()
            .all(|(id, _)| *id != want[0].0));
    }
}

fn shuffled(d: &Dataset, seed: u64) -> Dataset {
    let mut bundles = d.bundles.clone();
    bundles.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Dataset::from_bundles(bundles)
}

#[test]
fn metrics_ignore_order_and_thread_count() {
    let (st, d) = eval_fixture(2);
    assert!(d.positive_count() > 3);
    let base = run_eval(
        &st,
        &d,
        &HashScorer,
        &EvalConfig {
            jobs: 1,
            ..EvalConfig::default()
        },
    )
    .unwrap();
    let by_id: BTreeMap<String, Option<f64>> = base
        .results
        .iter()
        .map(|r| (r.proposition_id.clone(), r.score.confidence))
        .collect();
    for (seed, jobs) in [(1, 4), (2, 0), (3, 2)] {
        let perm = shuffled(&d, seed);
        let other = run_eval(
            &st,
            &perm,
            &HashScorer,
            &EvalConfig {
                jobs,
                ..EvalConfig::default()
            },
        )
        .unwrap();
        assert_eq!(other.report, base.report);
        let ids: Vec<&str> = perm.propositions().map(|p| p.proposition_id.as_str()).collect();
        let got: Vec<&str> = other.results.iter().map(|r| r.proposition_id.as_str()).collect();
        assert_eq!(got, ids, "results follow dataset order");
        for r in &other.results {
            assert_eq!(by_id[&r.proposition_id], r.score.confidence);
        }
    }
}

fn sparse_fixture() -> (booqa::corpus::CorpusStore, Dataset) {
    use common::{article, proposition, triple};
    let st = common::store(
        vec![
            article("a", "2020-01-01", 1),
            article("b", "2020-01-01", 1),
            article("c", "2020-01-02", 1),
        ],
        vec![
            triple("a", "0", "x", "go to", "y"),
            triple("b", "0", "x", "drive to", "y"),
            triple("c", "0", "m", "walk to", "n"),
        ],
    );
    let mk = |id: &str, label, pred: &str, parent, (subj, obj, art): (&str, &str, &str)| {
        let mut p = proposition(id, label, 0, pred, 5, parent);
        p.subject = subj.into();
        p.object = obj.into();
        p.source_sentences = [(art.to_string(), "0".to_string())].into();
        p
    };
    let bundles = vec![
        booqa::synthesis::Bundle {
            bundle_id: "p1".into(),
            positive: mk("p1", Label::Positive, "go to", None, ("x", "y", "a")),
            negatives: vec![mk("n1", Label::Negative, "walk to", Some("p1"), ("x", "y", "a"))],
        },
        booqa::synthesis::Bundle {
            bundle_id: "p2".into(),
            positive: mk("p2", Label::Positive, "walk to", None, ("m", "n", "c")),
            negatives: vec![mk("n2", Label::Negative, "drive to", Some("p2"), ("m", "n", "c"))],
        },
    ];
    (st, Dataset::from_bundles(bundles))
}

#[test]
fn abstention_differs_from_zero() {
    let (st, d) = sparse_fixture();
    let zero = run_eval(&st, &d, &ConstantScorer { value: 0.0 }, &EvalConfig::default()).unwrap();
    let conf: BTreeMap<&str, Option<f64>> = zero
        .results
        .iter()
        .map(|r| (r.proposition_id.as_str(), r.score.confidence))
        .collect();
    assert_eq!(conf["p1"], Some(0.0));
    assert_eq!(conf["n1"], Some(0.0));
    assert_eq!(conf["p2"], None);
    assert_eq!(conf["n2"], None);
    assert_eq!(zero.coverage, 0.5);
    assert_eq!(zero.max_recall(), 0.5);
    // a scored 0 outranks "no evidence": p1 and n1 tie ahead of p2 and n2
    let first = zero.report.curve.iter().find(|p| p.recall > 0.0).unwrap();
    assert_eq!((first.recall, first.precision), (0.5, 0.5));
    for mode in [RetrievalMode::Sentence, RetrievalMode::Tfidf] {
        let r = run_eval(&st, &d, &ConstantScorer { value: 0.0 }, &config(mode)).unwrap();
        let p2 = r.results.iter().find(|x| x.proposition_id == "p2").unwrap();
        assert_eq!(p2.score.confidence, None, "{mode}");
    }
}

struct FailingScorer;

impl Scorer for FailingScorer {
    fn id(&self) -> &str {
        "failing"
    }

    fn score_batch(&self, _: &[ScoringItem<'_>]) -> booqa::Result<Vec<Option<f64>>> {
        Err(booqa::Error::Bridge("down".into()))
    }
}

#[test]
fn scorer_failures_are_counted() {
    let (st, d) = sparse_fixture();
    let r = run_eval(&st, &d, &FailingScorer, &EvalConfig::default()).unwrap();
    let with_evidence = r.results.iter().filter(|x| x.score.evidence > 0).count();
    assert_eq!((r.scorer_failures, with_evidence), (2, 2));
    assert_eq!(r.coverage, 0.0);
}

#[test]
fn mismatched_corpus_is_rejected_before_scoring() {
    let (_, d) = eval_fixture(2);
    let small = common::store(vec![common::article("zz", "2019-01-01", 1)], Vec::new());
    assert!(check_dataset(&small, &d).is_err());
    let e = run_eval(&small, &d, &HashScorer, &EvalConfig::default()).unwrap_err();
    assert!(matches!(e, booqa::Error::CorpusMismatch(_)));
}

#[test]
fn fuzzy_graph_lookup_raises_recall_ceiling() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let types = ("thing".to_string(), "thing".to_string());
    let mut edges = Vec::new();
    for p in common::VOCAB {
        for h in common::VOCAB {
            if p != h && rng.random_bool(0.25) {
                let toks: Vec<&str> = p.split_whitespace().collect();
                let mut from = TypedPredicate::from_surface(&toks, types.clone());
                if rng.random_bool(0.5) {
                    // same surface, other role assignment: reachable only fuzzily
                    from = from.swapped();
                    from.types = types.clone();
                }
                let hto: Vec<&str> = h.split_whitespace().collect();
                edges.push((
                    from,
                    TypedPredicate::from_surface(&hto, types.clone()),
                    rng.random_range(0.0..1.0),
                ));
            }
        }
    }
    let g = Arc::new(EntailmentGraph::from_edges("gen", edges).unwrap().0);
    let mut strictly = false;
    for seed in 0..6 {
        let (st, d) = eval_fixture(seed);
        let cfg = EvalConfig::default();
        let exact = run_eval(&st, &d, &g.as_scorer(LookupMode::exact()), &cfg).unwrap();
        let fuzzy = run_eval(&st, &d, &g.as_scorer(LookupMode::fuzzy()), &cfg).unwrap();
        assert!(fuzzy.max_recall() >= exact.max_recall());
        strictly |= fuzzy.max_recall() > exact.max_recall();
        let e: HashMap<_, _> = exact
            .results
            .iter()
            .map(|r| (&r.proposition_id, r.score.confidence))
            .collect();
        for r in &fuzzy.results {
            if let Some(x) = e[&r.proposition_id] {
                assert!(r.score.confidence.unwrap() >= x);
            }
        }
    }
    assert!(strictly);
}
