//! Converse-paired premise/hypothesis datasets: sub-group classification,
//! leak-free splits, pairwise subsets, prompt rendering and the
//! hypothesis-only and argument-masking transforms.

mod levyholt;
mod transform;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::normalize_arg;

pub use levyholt::{read_levyholt, read_levyholt_file, ColumnOrder};
pub use transform::{
    honly_transform, mask_arguments, mask_relation, subsplit, subsplit_dev, BridgeTypeAssigner, GazetteerAssigner,
    Subsplit, TypeAssigner, FALLBACK_TYPE, HONLY_WORD_EN, HONLY_WORD_ZH,
};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Relation {
    pub subject: String,
    pub predicate: String,
    pub object: String,
}

impl Relation {
    pub fn new(subject: &str, predicate: &str, object: &str) -> Self {
        Relation {
            subject: subject.trim().to_string(),
            predicate: predicate.trim().to_string(),
            object: object.trim().to_string(),
        }
    }

    /// `subject predicate object`, skipping empty parts.
    pub fn render(&self) -> String {
        [&self.subject, &self.predicate, &self.object]
            .iter()
            .filter(|s| !s.is_empty())
            .map(|s| s.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Case- and space-insensitive identity used for converse linking and
    /// overlap detection.
    pub fn key(&self) -> String {
        normalize_arg(&self.render())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "dev" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidArgument(format!("unknown split `{other}`"))),
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntailmentPair {
    pub id: String,
    pub premise: Relation,
    pub hypothesis: Relation,
    pub label: bool,
    #[serde(default)]
    pub converse_id: Option<String>,
    pub split: Split,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SubGroup {
    DirTrue,
    DirFalse,
    Paraphrases,
    Unrelated,
}

impl SubGroup {
    pub const ALL: [SubGroup; 4] = [
        SubGroup::DirTrue,
        SubGroup::DirFalse,
        SubGroup::Paraphrases,
        SubGroup::Unrelated,
    ];

    pub fn of(label: bool, converse_label: bool) -> SubGroup {
        match (label, converse_label) {
            (true, false) => SubGroup::DirTrue,
            (false, true) => SubGroup::DirFalse,
            (true, true) => SubGroup::Paraphrases,
            (false, false) => SubGroup::Unrelated,
        }
    }

    /// The entries' own gold label.
    pub fn label(self) -> bool {
        matches!(self, SubGroup::DirTrue | SubGroup::Paraphrases)
    }

    /// How paraphrastic the group's entries are.
    fn paraphrasticity(self) -> u8 {
        match self {
            SubGroup::Paraphrases => 2,
            SubGroup::DirTrue | SubGroup::DirFalse => 1,
            SubGroup::Unrelated => 0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SubGroup::DirTrue => "DirTrue",
            SubGroup::DirFalse => "DirFalse",
            SubGroup::Paraphrases => "Paraphrases",
            SubGroup::Unrelated => "Unrelated",
        }
    }
}

impl fmt::Display for SubGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SubGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SubGroup::ALL
            .into_iter()
            .find(|g| g.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown sub-group `{s}`")))
    }
}

/// Links each pair to the entry whose premise and hypothesis are its own
/// swapped, across all splits. Links are symmetric; duplicates beyond the
/// first match stay unlinked. Returns the number of linked entries.
pub fn link_converses(pairs: &mut [EntailmentPair]) -> usize {
    let mut by_key: HashMap<(String, String), Vec<usize>> = HashMap::new();
    for (i, p) in pairs.iter().enumerate() {
        by_key.entry((p.premise.key(), p.hypothesis.key())).or_default().push(i);
    }
    let mut partner: Vec<Option<usize>> = vec![None; pairs.len()];
    for i in 0..pairs.len() {
        if partner[i].is_some() {
            continue;
        }
        let swapped = (pairs[i].hypothesis.key(), pairs[i].premise.key());
        if swapped.0 == swapped.1 {
            continue;
        }
        if let Some(&j) = by_key
            .get(&swapped)
            .and_then(|c| c.iter().find(|&&j| j != i && partner[j].is_none()))
        {
            partner[i] = Some(j);
            partner[j] = Some(i);
        }
    }
    let ids: Vec<String> = pairs.iter().map(|p| p.id.clone()).collect();
    let mut linked = 0;
    for (p, j) in pairs.iter_mut().zip(partner) {
        p.converse_id = j.map(|j| ids[j].clone());
        linked += usize::from(j.is_some());
    }
    linked
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub groups: BTreeMap<String, SubGroup>,
    /// Entries without a converse; kept out of the mesh.
    pub unpaired: Vec<String>,
}

impl Classification {
    /// Group sizes per split.
    pub fn counts(&self, pairs: &[EntailmentPair]) -> BTreeMap<(Split, SubGroup), usize> {
        let mut out = BTreeMap::new();
        for p in pairs {
            if let Some(&g) = self.groups.get(&p.id) {
                *out.entry((p.split, g)).or_insert(0) += 1;
            }
        }
        out
    }
}

pub fn classify_subgroups(pairs: &[EntailmentPair]) -> Classification {
    let labels: HashMap<&str, bool> = pairs.iter().map(|p| (p.id.as_str(), p.label)).collect();
    let mut out = Classification::default();
    for p in pairs {
        match p.converse_id.as_deref().and_then(|c| labels.get(c)) {
            Some(&cl) => {
                out.groups.insert(p.id.clone(), SubGroup::of(p.label, cl));
            }
            None => out.unpaired.push(p.id.clone()),
        }
    }
    out
}

/// Moves every converse pair that straddles two splits into one of the
/// two, picked uniformly with `seed`. Pairs are visited in input order.
/// Returns the number of repaired pairs.
pub fn fix_split_leakage(pairs: &mut [EntailmentPair], seed: u64) -> usize {
    let index: HashMap<String, usize> = pairs.iter().enumerate().map(|(i, p)| (p.id.clone(), i)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut repaired = 0;
    for i in 0..pairs.len() {
        let Some(&j) = pairs[i].converse_id.as_ref().and_then(|c| index.get(c)) else {
            continue;
        };
        if j <= i || pairs[i].split == pairs[j].split {
            continue;
        }
        let split = if rng.random_bool(0.5) {
            pairs[i].split
        } else {
            pairs[j].split
        };
        pairs[i].split = split;
        pairs[j].split = split;
        repaired += 1;
    }
    repaired
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetEntry {
    pub id: String,
    pub premise: String,
    pub hypothesis: String,
    /// Subset label, after the same-label rule.
    pub label: bool,
    pub gold_label: bool,
    pub group: SubGroup,
    pub split: Split,
    pub converse_id: Option<String>,
}

/// Subset labels for a group pair: opposite-label groups keep their gold
/// labels; for same-label groups the more paraphrastic one gets 1.
pub fn subset_labels(a: SubGroup, b: SubGroup) -> Result<(bool, bool)> {
    if a == b {
        return Err(Error::InvalidArgument(format!(
            "subset needs two distinct groups, got {a} twice"
        )));
    }
    if a.label() != b.label() {
        return Ok((a.label(), b.label()));
    }
    let (pa, pb) = (a.paraphrasticity(), b.paraphrasticity());
    assert_ne!(pa, pb, "same-label groups {a} and {b} tie on paraphrasticity");
    Ok((pa > pb, pb > pa))
}

pub fn build_subset(
    a: SubGroup,
    b: SubGroup,
    pairs: &[EntailmentPair],
    classes: &Classification,
) -> Result<Vec<SubsetEntry>> {
    let (la, lb) = subset_labels(a, b)?;
    Ok(pairs
        .iter()
        .filter_map(|p| {
            let g = *classes.groups.get(&p.id)?;
            let label = if g == a {
                la
            } else if g == b {
                lb
            } else {
                return None;
            };
            Some(SubsetEntry {
                id: p.id.clone(),
                premise: p.premise.render(),
                hypothesis: p.hypothesis.render(),
                label,
                gold_label: p.label,
                group: g,
                split: p.split,
                converse_id: p.converse_id.clone(),
            })
        })
        .collect())
}

/// All six group pairs in canonical order, each with its file name.
pub fn all_subsets(pairs: &[EntailmentPair], classes: &Classification) -> Result<Vec<(String, Vec<SubsetEntry>)>> {
    let mut out = Vec::new();
    for (i, &a) in SubGroup::ALL.iter().enumerate() {
        for &b in &SubGroup::ALL[i + 1..] {
            out.push((format!("{a}-{b}.jsonl"), build_subset(a, b, pairs, classes)?));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub id: String,
    /// Must contain `{premise}` and `{hypothesis}`.
    pub text: String,
}

impl PromptTemplate {
    pub fn new(id: &str, text: &str) -> Result<Self> {
        if !text.contains("{premise}") || !text.contains("{hypothesis}") {
            return Err(Error::InvalidArgument(format!(
                "template `{id}` needs both {{premise}} and {{hypothesis}} slots"
            )));
        }
        Ok(PromptTemplate {
            id: id.to_string(),
            text: text.to_string(),
        })
    }

    pub fn fill(&self, premise: &str, hypothesis: &str) -> String {
        // Single pass so slot-like text inside arguments is left alone.
        let mut out = String::with_capacity(self.text.len() + premise.len() + hypothesis.len());
        let mut rest = self.text.as_str();
        while let Some(pos) = rest.find('{') {
            out.push_str(&rest[..pos]);
            let tail = &rest[pos..];
            if let Some(r) = tail.strip_prefix("{premise}") {
                out.push_str(premise);
                rest = r;
            } else if let Some(r) = tail.strip_prefix("{hypothesis}") {
                out.push_str(hypothesis);
                rest = r;
            } else {
                out.push('{');
                rest = &tail[1..];
            }
        }
        out.push_str(rest);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Reversed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptInstance {
    pub template_id: String,
    pub text: String,
    pub direction: Direction,
}

/// Forward instances per template; with `symmetric`, each is followed by
/// its premise/hypothesis-swapped counterpart.
pub fn render_prompts(pair: &EntailmentPair, templates: &[PromptTemplate], symmetric: bool) -> Vec<PromptInstance> {
    let (p, h) = (pair.premise.render(), pair.hypothesis.render());
    let mut out = Vec::with_capacity(templates.len() * if symmetric { 2 } else { 1 });
    for t in templates {
        out.push(PromptInstance {
            template_id: t.id.clone(),
            text: t.fill(&p, &h),
            direction: Direction::Forward,
        });
        if symmetric {
            out.push(PromptInstance {
                template_id: t.id.clone(),
                text: t.fill(&h, &p),
                direction: Direction::Reversed,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(id: &str, p: (&str, &str, &str), h: (&str, &str, &str), label: bool, split: Split) -> EntailmentPair {
        EntailmentPair {
            id: id.into(),
            premise: Relation::new(p.0, p.1, p.2),
            hypothesis: Relation::new(h.0, h.1, h.2),
            label,
            converse_id: None,
            split,
        }
    }

    #[test]
    fn same_label_rule() {
        use SubGroup::*;
        assert_eq!(subset_labels(DirTrue, DirFalse).unwrap(), (true, false));
        assert_eq!(subset_labels(Paraphrases, Unrelated).unwrap(), (true, false));
        assert_eq!(subset_labels(Paraphrases, DirTrue).unwrap(), (true, false));
        assert_eq!(subset_labels(DirTrue, Paraphrases).unwrap(), (false, true));
        assert_eq!(subset_labels(DirFalse, Unrelated).unwrap(), (true, false));
        assert_eq!(subset_labels(Paraphrases, DirFalse).unwrap(), (true, false));
        assert!(subset_labels(Unrelated, Unrelated).is_err());
    }

    #[test]
    fn converse_linking_and_leakage() {
        let mut pairs = vec![
            pair("a", ("x", "shop in", "y"), ("x", "go to", "y"), true, Split::Train),
            pair("b", ("x", "go to", "y"), ("X", "shop  in", "y"), false, Split::Dev),
            pair("c", ("x", "buy", "y"), ("x", "own", "y"), true, Split::Test),
        ];
        assert_eq!(link_converses(&mut pairs), 2);
        assert_eq!(pairs[0].converse_id.as_deref(), Some("b"));
        assert_eq!(pairs[1].converse_id.as_deref(), Some("a"));
        let classes = classify_subgroups(&pairs);
        assert_eq!(classes.groups["a"], SubGroup::DirTrue);
        assert_eq!(classes.groups["b"], SubGroup::DirFalse);
        assert_eq!(classes.unpaired, vec!["c".to_string()]);
        let mut again = pairs.clone();
        assert_eq!(fix_split_leakage(&mut pairs, 3), 1);
        assert_eq!(pairs[0].split, pairs[1].split);
        fix_split_leakage(&mut again, 3);
        assert_eq!(pairs, again);
    }

    #[test]
    fn prompt_rendering() {
        let p = pair(
            "a",
            ("John", "shopped in", "IKEA"),
            ("John", "went to", "IKEA"),
            true,
            Split::Dev,
        );
        let t = PromptTemplate::new("t1", "{premise}, which means that {hypothesis}").unwrap();
        let out = render_prompts(&p, std::slice::from_ref(&t), false);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].text, "John shopped in IKEA, which means that John went to IKEA");
        let sym = render_prompts(&p, &[t], true);
        assert_eq!(sym[1].text, "John went to IKEA, which means that John shopped in IKEA");
        assert_eq!(sym[1].direction, Direction::Reversed);
        assert!(PromptTemplate::new("bad", "{premise} only").is_err());
        let odd = PromptTemplate::new("o", "{premise} {x} {hypothesis}").unwrap();
        assert_eq!(odd.fill("{hypothesis}", "h"), "{hypothesis} {x} h");
    }
}
