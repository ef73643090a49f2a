use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use super::{EntailmentPair, Relation};
use crate::error::{Error, Result};
use crate::harness::BridgeClient;
use crate::text::normalize_arg;

pub const HONLY_WORD_EN: &str = "true";
pub const HONLY_WORD_ZH: &str = "正确";
pub const FALLBACK_TYPE: &str = "entity";

/// Replaces the premise by the single mask word; the hypothesis is untouched.
pub fn honly_transform(pair: &EntailmentPair, mask_word: &str) -> EntailmentPair {
    EntailmentPair {
        premise: Relation {
            subject: String::new(),
            predicate: mask_word.to_string(),
            object: String::new(),
        },
        ..pair.clone()
    }
}

/// Entity typing hook for argument masking.
pub trait TypeAssigner: Send + Sync {
    /// A type label, or `None` when the argument is unknown.
    fn assign(&self, argument: &str, context: &str) -> Result<Option<String>>;
}

/// Static argument-to-type table. Known type labels map to themselves, so
/// masking is idempotent.
#[derive(Debug, Clone, Default)]
pub struct GazetteerAssigner {
    entries: HashMap<String, String>,
    labels: BTreeSet<String>,
}

impl GazetteerAssigner {
    pub fn new<I, A, T>(entries: I) -> Self
    where
        I: IntoIterator<Item = (A, T)>,
        A: AsRef<str>,
        T: AsRef<str>,
    {
        let mut g = GazetteerAssigner::default();
        for (a, t) in entries {
            g.entries.insert(normalize_arg(a.as_ref()), t.as_ref().to_string());
            g.labels.insert(t.as_ref().to_string());
        }
        g
    }

    /// `argument<TAB>type` lines; blank lines and `#` comments skipped.
    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (a, t) = line
                .split_once('\t')
                .filter(|(a, t)| !a.trim().is_empty() && !t.trim().is_empty())
                .ok_or_else(|| Error::InputFormat(format!("gazetteer line {}: expected `argument<TAB>type`", i + 1)))?;
            rows.push((a.trim().to_string(), t.trim().to_string()));
        }
        Ok(Self::new(rows))
    }
}

impl TypeAssigner for GazetteerAssigner {
    fn assign(&self, argument: &str, _context: &str) -> Result<Option<String>> {
        if self.labels.contains(argument) {
            return Ok(Some(argument.to_string()));
        }
        Ok(self.entries.get(&normalize_arg(argument)).cloned())
    }
}

/// Types arguments through `type` bridge requests; each reply is a label
/// string or `null`.
#[derive(Debug, Clone)]
pub struct BridgeTypeAssigner {
    client: Arc<BridgeClient>,
}

impl BridgeTypeAssigner {
    pub fn new(client: Arc<BridgeClient>) -> Self {
        BridgeTypeAssigner { client }
    }
}

impl TypeAssigner for BridgeTypeAssigner {
    fn assign(&self, argument: &str, context: &str) -> Result<Option<String>> {
        let reply = self
            .client
            .call("type", &[json!({"argument": argument, "context": context})])?;
        match &reply[0] {
            Value::Null => Ok(None),
            Value::String(s) if !s.trim().is_empty() => Ok(Some(s.trim().to_string())),
            other => Err(Error::Bridge(format!("type reply is not a label: {other}"))),
        }
    }
}

fn type_or_fallback(assigner: &dyn TypeAssigner, argument: &str, context: &str) -> String {
    match assigner.assign(argument, context) {
        Ok(Some(t)) => t,
        Ok(None) => {
            log::debug!("no type for `{argument}`; using `{FALLBACK_TYPE}`");
            FALLBACK_TYPE.to_string()
        }
        Err(e) => {
            log::warn!("typing `{argument}` failed: {e}; using `{FALLBACK_TYPE}`");
            FALLBACK_TYPE.to_string()
        }
    }
}

/// Subject and object replaced by their types; the predicate is kept.
pub fn mask_relation(rel: &Relation, assigner: &dyn TypeAssigner) -> Relation {
    let context = rel.render();
    let mask = |arg: &str| {
        if arg.is_empty() {
            String::new()
        } else {
            type_or_fallback(assigner, arg, &context)
        }
    };
    Relation {
        subject: mask(&rel.subject),
        predicate: rel.predicate.clone(),
        object: mask(&rel.object),
    }
}

pub fn mask_arguments(pair: &EntailmentPair, assigner: &dyn TypeAssigner) -> EntailmentPair {
    EntailmentPair {
        premise: mask_relation(&pair.premise, assigner),
        hypothesis: mask_relation(&pair.hypothesis, assigner),
        ..pair.clone()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subsplit<T> {
    pub train: Vec<T>,
    pub dev: Vec<T>,
    /// Entries moved across sides to keep overlapping hypotheses together.
    pub moved: usize,
    pub warnings: Vec<String>,
}

/// Seeded split into `train_size` and the rest. Entries sharing a key
/// (regardless of label) that land on both sides are then gathered on one
/// side picked at random, so sizes may drift from the target; a warning
/// reports any drift.
pub fn subsplit<T: Clone>(items: &[T], key: impl Fn(&T) -> String, train_size: usize, seed: u64) -> Subsplit<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.shuffle(&mut rng);
    let train_size = train_size.min(items.len());
    let mut in_train = vec![false; items.len()];
    for &i in &order[..train_size] {
        in_train[i] = true;
    }
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, it) in items.iter().enumerate() {
        groups.entry(key(it)).or_default().push(i);
    }
    let mut moved = 0;
    for members in groups.values() {
        let on_train = members.iter().filter(|&&i| in_train[i]).count();
        if on_train == 0 || on_train == members.len() {
            continue;
        }
        let to_train = rng.random_bool(0.5);
        for &i in members {
            if in_train[i] != to_train {
                in_train[i] = to_train;
                moved += 1;
            }
        }
    }
    let mut out = Subsplit {
        train: Vec::new(),
        dev: Vec::new(),
        moved,
        warnings: Vec::new(),
    };
    for &i in &order {
        if in_train[i] {
            out.train.push(items[i].clone());
        } else {
            out.dev.push(items[i].clone());
        }
    }
    if out.train.len() != train_size {
        let w = format!(
            "overlap dedup moved {moved} entries; train holds {} instead of {train_size}",
            out.train.len()
        );
        log::warn!("{w}");
        out.warnings.push(w);
    }
    out
}

/// Dev sub-split keyed on the hypothesis text.
pub fn subsplit_dev(dev: &[EntailmentPair], train_size: usize, seed: u64) -> Subsplit<EntailmentPair> {
    subsplit(dev, |p| p.hypothesis.key(), train_size, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Split;

    fn pair(id: &str, h: &str, label: bool) -> EntailmentPair {
        EntailmentPair {
            id: id.into(),
            premise: Relation::new("Mark Zuckerburg", "says in", "Facebook"),
            hypothesis: Relation::new("a", h, "b"),
            label,
            converse_id: None,
            split: Split::Dev,
        }
    }

    #[test]
    fn honly_is_idempotent_and_keeps_hypothesis() {
        let p = pair("1", "owns", true);
        let once = honly_transform(&p, HONLY_WORD_EN);
        assert_eq!(once.premise.render(), "true");
        assert_eq!(once.hypothesis, p.hypothesis);
        assert_eq!(honly_transform(&once, HONLY_WORD_EN), once);
        assert_eq!(honly_transform(&p, HONLY_WORD_ZH).premise.render(), "正确");
    }

    #[test]
    fn masking_with_fallback() {
        let g = GazetteerAssigner::new([("mark zuckerburg", "person"), ("facebook", "organization")]);
        let p = pair("1", "owns", true);
        let m = mask_arguments(&p, &g);
        assert_eq!(m.premise.render(), "person says in organization");
        assert_eq!(m.hypothesis.render(), "entity owns entity");
        assert_eq!(mask_arguments(&m, &g).premise, m.premise);
    }

    #[test]
    fn subsplit_keeps_overlaps_on_one_side() {
        let items: Vec<EntailmentPair> = (0..40)
            .map(|i| pair(&i.to_string(), &format!("p{}", i % 10), i % 2 == 0))
            .collect();
        let s = subsplit_dev(&items, 20, 9);
        let train: BTreeSet<String> = s.train.iter().map(|p| p.hypothesis.key()).collect();
        let dev: BTreeSet<String> = s.dev.iter().map(|p| p.hypothesis.key()).collect();
        assert!(train.is_disjoint(&dev));
        assert_eq!(s.train.len() + s.dev.len(), 40);
        assert_eq!(subsplit_dev(&items, 20, 9), s);

        let unique: Vec<EntailmentPair> = (0..30).map(|i| pair(&i.to_string(), &format!("u{i}"), true)).collect();
        let s = subsplit_dev(&unique, 12, 1);
        assert_eq!((s.train.len(), s.dev.len(), s.moved), (12, 18, 0));
        assert!(s.warnings.is_empty());
    }
}
