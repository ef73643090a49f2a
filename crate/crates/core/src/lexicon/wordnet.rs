//! Reader for WordNet 3.x plain-text `data.*`, `index.*` and `*.exc` files.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use super::{normalize_lemma, Lexicon, Synset};
use crate::error::{Error, Result};

/// (file suffix, synset id prefix). Verbs come first so that predicate heads
/// rank their verbal senses ahead of nominal ones.
const POS_FILES: &[(&str, char)] = &[("verb", 'v'), ("noun", 'n'), ("adj", 'a'), ("adv", 'r')];

fn pos_letter(code: &str) -> Option<char> {
    match code {
        "n" => Some('n'),
        "v" => Some('v'),
        "a" | "s" => Some('a'),
        "r" => Some('r'),
        _ => None,
    }
}

fn synset_id(pos: char, offset: &str) -> String {
    format!("{pos}{offset}")
}

/// Strips adjective syntactic markers such as `(p)` and `(ip)`.
fn clean_word(word: &str) -> &str {
    match word.find('(') {
        Some(i) if word.ends_with(')') => &word[..i],
        _ => word,
    }
}

fn parse_data_line(line: &str, path: &Path, lineno: usize) -> Result<Synset> {
    let bad = |what: &str| Error::InputFormat(format!("{}:{lineno}: {what}", path.display()));
    let body = line.split(" | ").next().unwrap_or(line);
    let mut f = body.split_whitespace();
    let offset = f.next().ok_or_else(|| bad("missing offset"))?;
    let _lex_filenum = f.next().ok_or_else(|| bad("missing lex_filenum"))?;
    let ss_type = f.next().ok_or_else(|| bad("missing ss_type"))?;
    let pos = pos_letter(ss_type).ok_or_else(|| bad("unknown ss_type"))?;
    let w_cnt = f
        .next()
        .and_then(|w| usize::from_str_radix(w, 16).ok())
        .ok_or_else(|| bad("bad w_cnt"))?;
    let mut lemmas = Vec::with_capacity(w_cnt);
    for _ in 0..w_cnt {
        let word = f.next().ok_or_else(|| bad("truncated word list"))?;
        let _lex_id = f.next().ok_or_else(|| bad("truncated word list"))?;
        lemmas.push(normalize_lemma(clean_word(word)));
    }
    let p_cnt: usize = f.next().and_then(|p| p.parse().ok()).ok_or_else(|| bad("bad p_cnt"))?;
    let mut hyponyms = Vec::new();
    for _ in 0..p_cnt {
        let symbol = f.next().ok_or_else(|| bad("truncated pointer list"))?;
        let target = f.next().ok_or_else(|| bad("truncated pointer list"))?;
        let target_pos = f.next().and_then(pos_letter).ok_or_else(|| bad("bad pointer pos"))?;
        let _source_target = f.next().ok_or_else(|| bad("truncated pointer list"))?;
        if symbol == "~" || symbol == "~i" {
            let id = synset_id(target_pos, target);
            if !hyponyms.contains(&id) {
                hyponyms.push(id);
            }
        }
    }
    Ok(Synset {
        id: synset_id(pos, offset),
        lemmas,
        hyponyms,
    })
}

/// Loads every `data.<pos>` file in `dir`. When the matching `index.<pos>`
/// is present its sense order ranks the synsets of each lemma; otherwise
/// file order is used.
pub fn load_wordnet_dir(dir: &Path) -> Result<Lexicon> {
    let mut synsets: Vec<Synset> = Vec::new();
    let mut sense_order: Vec<(String, Vec<String>)> = Vec::new();
    let mut exceptions: HashMap<String, Vec<String>> = HashMap::new();

    for (suffix, pos) in POS_FILES {
        let data = dir.join(format!("data.{suffix}"));
        if !data.exists() {
            continue;
        }
        let text = fs::read_to_string(&data).map_err(|e| Error::io(&data, e))?;
        for (i, line) in text.lines().enumerate() {
            // license header lines start with two spaces
            if line.starts_with(' ') || line.trim().is_empty() {
                continue;
            }
            let synset = parse_data_line(line, &data, i + 1)?;
            synsets.push(synset);
        }

        let index = dir.join(format!("index.{suffix}"));
        if index.exists() {
            let text = fs::read_to_string(&index).map_err(|e| Error::io(&index, e))?;
            for line in text.lines().filter(|l| !l.starts_with(' ')) {
                let f: Vec<&str> = line.split_whitespace().collect();
                if f.len() < 4 {
                    continue;
                }
                let Ok(synset_cnt) = f[2].parse::<usize>() else {
                    continue;
                };
                let offsets = &f[f.len().saturating_sub(synset_cnt)..];
                sense_order.push((
                    normalize_lemma(f[0]),
                    offsets.iter().map(|o| synset_id(*pos, o)).collect(),
                ));
            }
        }

        let exc = dir.join(format!("{suffix}.exc"));
        if exc.exists() {
            let text = fs::read_to_string(&exc).map_err(|e| Error::io(&exc, e))?;
            for line in text.lines() {
                let mut f = line.split_whitespace();
                if let Some(form) = f.next() {
                    let entry = exceptions.entry(normalize_lemma(form)).or_default();
                    for base in f.map(normalize_lemma) {
                        if !entry.contains(&base) {
                            entry.push(base);
                        }
                    }
                }
            }
        }
    }
    if synsets.is_empty() {
        return Err(Error::InputFormat(format!(
            "no WordNet data files found in {}",
            dir.display()
        )));
    }

    if !sense_order.is_empty() {
        // Reorder synsets so each lemma's index-file sense order is respected
        // by first appearance: a stable sort on the best rank any lemma gives.
        let mut best_rank: HashMap<&str, usize> = HashMap::new();
        for (_, offsets) in &sense_order {
            for (rank, id) in offsets.iter().enumerate() {
                let r = best_rank.entry(id.as_str()).or_insert(rank);
                *r = (*r).min(rank);
            }
        }
        let mut order: Vec<usize> = (0..synsets.len()).collect();
        order.sort_by_key(|&i| best_rank.get(synsets[i].id.as_str()).copied().unwrap_or(usize::MAX));
        let mut slots: Vec<Option<Synset>> = synsets.into_iter().map(Some).collect();
        synsets = order
            .into_iter()
            .map(|i| slots[i].take().expect("each index once"))
            .collect();
        let lexicon = Lexicon::with_exceptions(synsets, exceptions)?;
        return Ok(lexicon.apply_sense_order(&sense_order));
    }
    Lexicon::with_exceptions(synsets, exceptions)
}

impl Lexicon {
    /// Overrides per-lemma candidate order with explicit index-file sense lists.
    fn apply_sense_order(mut self, sense_order: &[(String, Vec<String>)]) -> Lexicon {
        let mut merged: HashMap<String, Vec<usize>> = HashMap::new();
        for (lemma, ids) in sense_order {
            let entry = merged.entry(lemma.clone()).or_default();
            for id in ids {
                if let Some(&i) = self.by_id.get(id) {
                    if !entry.contains(&i) {
                        entry.push(i);
                    }
                }
            }
        }
        for (lemma, ranked) in merged {
            if let Some(existing) = self.by_lemma.get_mut(&lemma) {
                let mut reordered: Vec<usize> = ranked.into_iter().filter(|i| existing.contains(i)).collect();
                for i in existing.iter() {
                    if !reordered.contains(i) {
                        reordered.push(*i);
                    }
                }
                *existing = reordered;
            }
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DATA_VERB: &str = "  1 This software and database is being provided to you, the LICENSEE, by
00001000 29 v 02 go 0 travel 0 002 ~ 00002000 v 0000 ~ 00003000 v 0000 01 + 02 00 | change location
00002000 38 v 01 drive 0 001 @ 00001000 v 0000 01 + 02 00 | travel in a vehicle
00003000 38 v 01 walk 0 001 @ 00001000 v 0000 01 + 02 00 | use one's feet
00004000 38 v 01 go 1 000 01 + 02 00 | another sense of go
";
    const DATA_NOUN: &str = "00005000 04 n 02 practice_game 0 exhibition_game 0 000 | a game for practice
00006000 04 n 01 game 0 001 ~ 00005000 n 0000 | a contest
";
    const INDEX_VERB: &str = "  1 license line
go v 2 1 ~ 2 1 00004000 00001000
drive v 1 1 @ 1 0 00002000
walk v 1 1 @ 1 0 00003000
travel v 1 1 ~ 1 0 00001000
";

    #[test]
    fn parses_data_and_index_files() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("data.verb"), DATA_VERB).unwrap();
        fs::write(dir.path().join("data.noun"), DATA_NOUN).unwrap();
        fs::write(dir.path().join("index.verb"), INDEX_VERB).unwrap();
        fs::write(dir.path().join("verb.exc"), "went go\ndrove drive\n").unwrap();
        let lex = load_wordnet_dir(dir.path()).unwrap();
        assert_eq!(lex.len(), 6);
        assert_eq!(lex.hyponyms("v00001000", false).unwrap(), vec!["drive", "walk"]);
        assert_eq!(
            lex.hyponyms("n00006000", false).unwrap(),
            vec!["practice game", "exhibition game"]
        );
        // index.verb ranks 00004000 first for "go"
        assert_eq!(lex.sense_rank("go", "v00004000"), Some(1));
        assert_eq!(lex.sense_rank("go", "v00001000"), Some(2));
        let m = lex.match_spans(&["went", "to"]);
        assert_eq!(m[0].lemma, "go");
        let m = lex.match_spans(&["play", "practice", "game"]);
        assert!(m.iter().any(|s| s.lemma == "practice game" && s.start == 1));
    }

    #[test]
    fn malformed_line_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("data.verb"), "00001000 29 v zz go 0\n").unwrap();
        assert!(matches!(load_wordnet_dir(dir.path()), Err(Error::InputFormat(_))));
    }
}
