//! Brute-force reference implementations that apply the definitions
//! directly, sharing no code with the library.

#![allow(dead_code, clippy::too_many_arguments, clippy::type_complexity)]

use std::collections::{BTreeMap, BTreeSet};

use booqa::corpus::{Article, TripleRecord};
use serde_json::Value;

/// Threshold sweep: one point per distinct score, admitting `score >= t`.
pub fn pr_points(pairs: &[(f64, bool)]) -> Vec<(f64, f64)> {
    let positives = pairs.iter().filter(|p| p.1).count() as f64;
    let mut thresholds: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();
    thresholds
        .into_iter()
        .map(|t| {
            let admitted: Vec<&(f64, bool)> = pairs.iter().filter(|p| p.0 >= t).collect();
            let tp = admitted.iter().filter(|p| p.1).count() as f64;
            (tp / positives, tp / admitted.len() as f64)
        })
        .collect()
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (f(a) + 4.0 * f((a + b) / 2.0) + f(b))
}

fn bisect(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let neg_at_lo = f(lo) < 0.0;
    for _ in 0..200 {
        let mid = (lo + hi) / 2.0;
        if (f(mid) < 0.0) == neg_at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) / 2.0
}

/// Area between the piecewise-linear curve (first precision held back to
/// recall 0) and `floor`, divided by `1 - floor`. With `clip`, only the
/// parts above the floor count.
pub fn area_above(points: &[(f64, f64)], floor: f64, clip: bool) -> f64 {
    let mut poly = vec![(0.0, points[0].1)];
    poly.extend_from_slice(points);
    let mut total = 0.0;
    for w in poly.windows(2) {
        let ((r1, p1), (r2, p2)) = (w[0], w[1]);
        if r2 <= r1 {
            continue;
        }
        let f = move |r: f64| p1 + (p2 - p1) * (r - r1) / (r2 - r1) - floor;
        if !clip {
            total += simpson(&f, r1, r2);
            continue;
        }
        let g = move |r: f64| f(r).max(0.0);
        if (f(r1) > 0.0) != (f(r2) > 0.0) && f(r1) != 0.0 && f(r2) != 0.0 {
            let c = bisect(&f, r1, r2);
            total += simpson(&g, r1, c) + simpson(&g, c, r2);
        } else {
            total += simpson(&g, r1, r2);
        }
    }
    total / (1.0 - floor)
}

pub struct OracleLexicon {
    /// lemma -> synset ids in file order
    senses: BTreeMap<String, Vec<String>>,
    lemmas: BTreeMap<String, Vec<String>>,
    hyponyms: BTreeMap<String, Vec<String>>,
}

impl OracleLexicon {
    pub fn from_json(text: &str) -> Self {
        let v: Value = serde_json::from_str(text).unwrap();
        let mut o = OracleLexicon {
            senses: BTreeMap::new(),
            lemmas: BTreeMap::new(),
            hyponyms: BTreeMap::new(),
        };
        for s in v["synsets"].as_array().unwrap() {
            let id = s["id"].as_str().unwrap().to_string();
            let lemmas: Vec<String> = s["lemmas"]
                .as_array()
                .unwrap()
                .iter()
                .map(|l| l.as_str().unwrap().replace('_', " "))
                .collect();
            for l in &lemmas {
                o.senses.entry(l.clone()).or_default().push(id.clone());
            }
            o.lemmas.insert(id.clone(), lemmas);
            let hypos = s
                .get("hyponyms")
                .and_then(Value::as_array)
                .map(|a| a.iter().map(|h| h.as_str().unwrap().to_string()).collect())
                .unwrap_or_default();
            o.hyponyms.insert(id, hypos);
        }
        o
    }

    fn synonyms(&self, word: &str) -> BTreeSet<String> {
        let mut out = BTreeSet::from([word.to_string()]);
        for id in self.senses.get(word).into_iter().flatten() {
            out.extend(self.lemmas[id].iter().cloned());
        }
        out
    }
}

pub type PosKey = (u32, String, String, String);
pub type NegKey = (u32, String, String, String, String);

pub struct OracleOutput {
    /// (window, subject, predicate, object)
    pub positives: BTreeSet<PosKey>,
    /// Sources per positive.
    pub sources: BTreeMap<PosKey, BTreeSet<(String, String)>>,
    /// (window, subject, predicate, object, parent predicate)
    pub negatives: BTreeSet<NegKey>,
}

/// Windows of `span` days from the earliest date; starring pairs need
/// `min_articles` articles and `min_predicates` predicates in the window;
/// predicates need `min_argpairs` distinct pairs corpus-wide; negatives
/// replace any span of at most `max_span` tokens by a direct hyponym lemma
/// of the span's first sense and must be felicitous and absent, with every
/// synonym variant, from the window with the pair.
pub fn synthesis(
    articles: &[Article],
    triples: &[TripleRecord],
    lex: &OracleLexicon,
    span: i64,
    min_articles: usize,
    min_predicates: usize,
    min_argpairs: usize,
    max_span: usize,
) -> OracleOutput {
    let epoch = articles.iter().map(|a| a.date).min().unwrap();
    let window_of: BTreeMap<&str, u32> = articles
        .iter()
        .map(|a| (a.article_id.as_str(), ((a.date - epoch).num_days() / span) as u32))
        .collect();
    let unordered = |a: &str, b: &str| {
        if a <= b {
            (a.to_string(), b.to_string())
        } else {
            (b.to_string(), a.to_string())
        }
    };
    // (window, article, sentence, subject, predicate, object)
    let rows: BTreeSet<(u32, String, String, String, String, String)> = triples
        .iter()
        .map(|t| {
            (
                window_of[t.article_id.as_str()],
                t.article_id.clone(),
                t.sentence_id.clone(),
                t.subject.to_lowercase(),
                t.predicate.join(" ").to_lowercase(),
                t.object.to_lowercase(),
            )
        })
        .collect();

    let mut felicity: BTreeMap<&str, BTreeSet<(String, String)>> = BTreeMap::new();
    for r in &rows {
        felicity.entry(r.4.as_str()).or_default().insert(unordered(&r.3, &r.5));
    }
    let felicitous = |p: &str| felicity.get(p).map_or(0, |s| s.len()) >= min_argpairs;

    let mut per_pair: BTreeMap<(u32, (String, String)), (BTreeSet<&str>, BTreeSet<&str>)> = BTreeMap::new();
    for r in &rows {
        let e = per_pair.entry((r.0, unordered(&r.3, &r.5))).or_default();
        e.0.insert(r.1.as_str());
        e.1.insert(r.4.as_str());
    }
    let starring = |w: u32, a: &str, b: &str| {
        per_pair
            .get(&(w, unordered(a, b)))
            .is_some_and(|(arts, preds)| arts.len() >= min_articles && preds.len() >= min_predicates)
    };
    let present = |w: u32, a: &str, b: &str, preds: &BTreeSet<String>| {
        rows.iter()
            .any(|r| r.0 == w && unordered(&r.3, &r.5) == unordered(a, b) && preds.contains(&r.4))
    };

    let mut out = OracleOutput {
        positives: BTreeSet::new(),
        sources: BTreeMap::new(),
        negatives: BTreeSet::new(),
    };
    for r in &rows {
        if starring(r.0, &r.3, &r.5) && felicitous(&r.4) {
            let key = (r.0, r.3.clone(), r.4.clone(), r.5.clone());
            out.sources
                .entry(key.clone())
                .or_default()
                .insert((r.1.clone(), r.2.clone()));
            out.positives.insert(key);
        }
    }

    for (w, subj, pred, obj) in &out.positives {
        let tokens: Vec<&str> = pred.split(' ').collect();
        let mut variants: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for i in 0..tokens.len() {
            for j in i + 1..=tokens.len().min(i + max_span) {
                let span_text = tokens[i..j].join(" ");
                let Some(first_sense) = lex.senses.get(&span_text).and_then(|s| s.first()) else {
                    continue;
                };
                let replace = |with: &str| {
                    let mut v: Vec<&str> = tokens[..i].to_vec();
                    v.push(with);
                    v.extend_from_slice(&tokens[j..]);
                    v.join(" ")
                };
                for h in &lex.hyponyms[first_sense] {
                    for lemma in &lex.lemmas[h] {
                        let cand = replace(lemma);
                        if &cand == pred {
                            continue;
                        }
                        let set = variants.entry(cand.clone()).or_default();
                        set.insert(cand.clone());
                        for s in lex.synonyms(lemma) {
                            set.insert(replace(&s));
                        }
                        set.extend(lex.synonyms(&cand));
                    }
                }
            }
        }
        for (cand, vars) in variants {
            if felicitous(&cand) && !present(*w, subj, obj, &vars) {
                out.negatives
                    .insert((*w, subj.clone(), cand, obj.clone(), pred.clone()));
            }
        }
    }
    out
}
