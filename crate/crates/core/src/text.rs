//! String normalization shared by the corpus, lexicon and graph modules.

use std::cmp::Ordering;

/// Case-folds and collapses internal whitespace.
pub fn normalize_arg(s: &str) -> String {
    s.split_whitespace()
        .map(|w| w.to_lowercase())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Canonical key of a predicate token sequence.
pub fn predicate_key<S: AsRef<str>>(tokens: &[S]) -> String {
    tokens
        .iter()
        .flat_map(|t| t.as_ref().split_whitespace())
        .map(|t| t.to_lowercase())
        .collect::<Vec<_>>()
        .join(" ")
}

const IRREGULAR: &[(&str, &str)] = &[
    ("am", "be"),
    ("are", "be"),
    ("is", "be"),
    ("was", "be"),
    ("were", "be"),
    ("been", "be"),
    ("has", "have"),
    ("had", "have"),
    ("does", "do"),
    ("did", "do"),
    ("done", "do"),
    ("goes", "go"),
    ("went", "go"),
    ("gone", "go"),
    ("made", "make"),
    ("said", "say"),
    ("says", "say"),
    ("took", "take"),
    ("taken", "take"),
    ("gave", "give"),
    ("given", "give"),
    ("came", "come"),
    ("got", "get"),
    ("gotten", "get"),
    ("bought", "buy"),
    ("brought", "bring"),
    ("thought", "think"),
    ("told", "tell"),
    ("left", "leave"),
    ("met", "meet"),
    ("ran", "run"),
    ("won", "win"),
    ("lost", "lose"),
    ("saw", "see"),
    ("seen", "see"),
    ("drove", "drive"),
    ("driven", "drive"),
    ("spoke", "speak"),
    ("spoken", "speak"),
    ("wrote", "write"),
    ("written", "write"),
    ("fell", "fall"),
    ("fallen", "fall"),
    ("led", "lead"),
    ("held", "hold"),
    ("paid", "pay"),
    ("sold", "sell"),
    ("sent", "send"),
    ("built", "build"),
    ("began", "begin"),
    ("begun", "begin"),
    ("children", "child"),
    ("men", "man"),
    ("women", "woman"),
    ("people", "person"),
];

/// Morphological base form of a single token from a small rule table.
///
/// Irregular forms are looked up first; regular plural / third-person
/// suffixes are then stripped. Past tense and gerund suffixes are left
/// alone since stripping them blindly damages too many base forms.
pub fn base_form(token: &str) -> String {
    let t = token.to_lowercase();
    if let Some((_, base)) = IRREGULAR.iter().find(|(form, _)| *form == t) {
        return (*base).to_string();
    }
    let n = t.chars().count();
    if n > 4 && t.ends_with("ies") {
        return format!("{}y", &t[..t.len() - 3]);
    }
    if t.ends_with("sses") {
        return t[..t.len() - 2].to_string();
    }
    for suffix in ["ches", "shes", "xes", "zes"] {
        if n > suffix.len() + 1 && t.ends_with(suffix) {
            return t[..t.len() - 2].to_string();
        }
    }
    if n > 3 && t.ends_with('s') && !t.ends_with("ss") && !t.ends_with("us") && !t.ends_with("is") {
        return t[..t.len() - 1].to_string();
    }
    t
}

/// Lookup candidates for a token: its case-folded surface form, then its base form.
pub fn token_candidates(token: &str) -> Vec<String> {
    let surface = token.to_lowercase();
    let base = base_form(token);
    if base == surface {
        vec![surface]
    } else {
        vec![surface, base]
    }
}

/// Orders identifiers numerically when both are integers, lexicographically otherwise.
pub fn id_cmp(a: &str, b: &str) -> Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y).then_with(|| a.cmp(b)),
        _ => a.cmp(b),
    }
}
