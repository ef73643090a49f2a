use std::collections::{BTreeMap, BTreeSet};

use booqa::mesh::{
    all_subsets, classify_subgroups, fix_split_leakage, honly_transform, link_converses, mask_arguments, read_levyholt,
    render_prompts, subset_labels, subsplit, subsplit_dev, ColumnOrder, Direction, EntailmentPair, GazetteerAssigner,
    PromptTemplate, Relation, Split, SubGroup, FALLBACK_TYPE, HONLY_WORD_EN, HONLY_WORD_ZH,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pair(id: &str, p: &str, h: &str, label: bool, split: Split) -> EntailmentPair {
    EntailmentPair {
        id: id.into(),
        premise: Relation::new("x", p, "y"),
        hypothesis: Relation::new("x", h, "y"),
        label,
        converse_id: None,
        split,
    }
}

fn fixture() -> Vec<EntailmentPair> {
    vec![
        pair("1", "buy", "own", true, Split::Dev),
        pair("2", "own", "buy", false, Split::Dev),
        pair("3", "purchase", "buy", true, Split::Test),
        pair("4", "buy", "purchase", true, Split::Test),
        pair("5", "sell", "eat", false, Split::Test),
        pair("6", "eat", "sell", false, Split::Test),
        pair("7", "visit", "see", true, Split::Dev),
    ]
}

#[test]
fn fixture_groups_and_subsets() {
    let mut pairs = fixture();
    assert_eq!(link_converses(&mut pairs), 6);
    assert_eq!(pairs[0].converse_id.as_deref(), Some("2"));
    assert_eq!(pairs[1].converse_id.as_deref(), Some("1"));
    let classes = classify_subgroups(&pairs);
    assert_eq!(classes.unpaired, vec!["7".to_string()]);
    let expect = [
        ("1", SubGroup::DirTrue),
        ("2", SubGroup::DirFalse),
        ("3", SubGroup::Paraphrases),
        ("4", SubGroup::Paraphrases),
        ("5", SubGroup::Unrelated),
        ("6", SubGroup::Unrelated),
    ];
    for (id, g) in expect {
        assert_eq!(classes.groups[id], g, "pair {id}");
    }
    let counts = classes.counts(&pairs);
    assert_eq!(counts[&(Split::Dev, SubGroup::DirTrue)], 1);
    assert_eq!(counts[&(Split::Test, SubGroup::Paraphrases)], 2);

    let subsets = all_subsets(&pairs, &classes).unwrap();
    let names: Vec<&str> = subsets.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(
        names,
        [
            "DirTrue-DirFalse.jsonl",
            "DirTrue-Paraphrases.jsonl",
            "DirTrue-Unrelated.jsonl",
            "DirFalse-Paraphrases.jsonl",
            "DirFalse-Unrelated.jsonl",
            "Paraphrases-Unrelated.jsonl",
        ]
    );
    let labels = |name: &str| -> BTreeMap<String, bool> {
        subsets
            .iter()
            .find(|(n, _)| n == name)
            .unwrap()
            .1
            .iter()
            .map(|e| (e.id.clone(), e.label))
            .collect()
    };
    assert_eq!(
        labels("DirTrue-DirFalse.jsonl"),
        BTreeMap::from([("1".into(), true), ("2".into(), false)])
    );
    // same-label pairs: the more paraphrastic group is the positive side
    assert_eq!(
        labels("DirTrue-Paraphrases.jsonl"),
        BTreeMap::from([("1".into(), false), ("3".into(), true), ("4".into(), true)])
    );
    assert_eq!(
        labels("DirFalse-Unrelated.jsonl"),
        BTreeMap::from([("2".into(), true), ("5".into(), false), ("6".into(), false)])
    );
    assert_eq!(
        labels("Paraphrases-Unrelated.jsonl"),
        BTreeMap::from([
            ("3".into(), true),
            ("4".into(), true),
            ("5".into(), false),
            ("6".into(), false)
        ])
    );
}

#[test]
fn subset_label_table() {
    use SubGroup::*;
    let table = [
        (DirTrue, DirFalse, (true, false)),
        (DirTrue, Paraphrases, (false, true)),
        (DirTrue, Unrelated, (true, false)),
        (DirFalse, Paraphrases, (false, true)),
        (DirFalse, Unrelated, (true, false)),
        (Paraphrases, Unrelated, (true, false)),
    ];
    for (a, b, want) in table {
        assert_eq!(subset_labels(a, b).unwrap(), want, "{a}-{b}");
        assert_eq!(subset_labels(b, a).unwrap(), (want.1, want.0), "{b}-{a}");
    }
    assert!(subset_labels(DirTrue, DirTrue).is_err());
    for g in SubGroup::ALL {
        assert_eq!(g.to_string().parse::<SubGroup>().unwrap(), g);
    }
}

fn random_pairs(seed: u64) -> Vec<EntailmentPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let preds = ["buy", "own", "sell", "eat", "see", "visit", "rent"];
    let mut out = Vec::new();
    for i in 0..rng.random_range(5..40) {
        let p = preds[rng.random_range(0..preds.len())];
        let h = preds[rng.random_range(0..preds.len())];
        let split = if rng.random_bool(0.5) { Split::Dev } else { Split::Test };
        out.push(pair(&i.to_string(), p, h, rng.random_bool(0.5), split));
    }
    out
}

#[test]
fn converse_links_agree_with_brute_force() {
    for seed in 0..50 {
        let mut pairs = random_pairs(seed);
        link_converses(&mut pairs);
        let by_id: BTreeMap<&str, &EntailmentPair> = pairs.iter().map(|p| (p.id.as_str(), p)).collect();
        for p in &pairs {
            match &p.converse_id {
                Some(c) => {
                    let q = by_id[c.as_str()];
                    assert_eq!(q.converse_id.as_deref(), Some(p.id.as_str()));
                    assert_eq!(
                        (q.premise.key(), q.hypothesis.key()),
                        (p.hypothesis.key(), p.premise.key())
                    );
                }
                None => {
                    // unlinked only when every swapped entry is already taken
                    let free = pairs.iter().any(|q| {
                        q.id != p.id
                            && q.converse_id.is_none()
                            && p.premise.key() != p.hypothesis.key()
                            && (q.premise.key(), q.hypothesis.key()) == (p.hypothesis.key(), p.premise.key())
                    });
                    assert!(!free, "seed {seed}: {} left unlinked", p.id);
                }
            }
        }
        let classes = classify_subgroups(&pairs);
        for (id, g) in &classes.groups {
            let p = by_id[id.as_str()];
            let c = by_id[p.converse_id.as_deref().unwrap()];
            assert_eq!(*g, SubGroup::of(p.label, c.label));
            assert_eq!(g.label(), p.label);
        }
        assert_eq!(classes.groups.len() + classes.unpaired.len(), pairs.len());
    }
}

#[test]
fn leakage_repair_moves_both_members() {
    let mut pairs = vec![
        pair("a", "buy", "own", true, Split::Dev),
        pair("b", "own", "buy", false, Split::Test),
        pair("c", "eat", "sell", true, Split::Dev),
        pair("d", "sell", "eat", true, Split::Dev),
    ];
    link_converses(&mut pairs);
    let snapshot = pairs.clone();
    assert_eq!(fix_split_leakage(&mut pairs, 3), 1);
    assert_eq!(pairs[0].split, pairs[1].split);
    assert_eq!(&pairs[2..], &snapshot[2..]);
    let sides: BTreeSet<Split> = (0..32)
        .map(|s| {
            let mut p = snapshot.clone();
            fix_split_leakage(&mut p, s);
            p[0].split
        })
        .collect();
    assert_eq!(sides.len(), 2);
}

#[test]
fn levyholt_reader() {
    let tsv = "john,shopped in,ikea\tjohn,went to,ikea\t1\n\
               john,went to,ikea\tjohn,shopped in,ikea\tFalse\n\
               \n\
               a,is,part,of,b\ta,belongs to,b\t0\n";
    let pairs = read_levyholt(tsv.as_bytes(), Split::Dev, ColumnOrder::PremiseFirst).unwrap();
    assert_eq!(pairs.len(), 3);
    assert_eq!(pairs[0].id, "dev:1");
    assert_eq!(pairs[2].id, "dev:4");
    assert_eq!(pairs[0].premise.predicate, "shopped in");
    assert!(pairs[0].label && !pairs[1].label);
    assert_eq!(pairs[2].premise.predicate, "is,part,of");
    let flipped = read_levyholt(tsv.as_bytes(), Split::Dev, ColumnOrder::HypothesisFirst).unwrap();
    assert_eq!(flipped[0].premise, pairs[0].hypothesis);
    let err = read_levyholt("a,b\tc,d,e\t1\n".as_bytes(), Split::Test, ColumnOrder::PremiseFirst).unwrap_err();
    assert!(err.to_string().contains("line 1"));
    assert!(read_levyholt(
        "a,b,c\td,e,f\tmaybe\n".as_bytes(),
        Split::Test,
        ColumnOrder::PremiseFirst
    )
    .is_err());
}

#[test]
fn hypothesis_only_and_masking() {
    let p = EntailmentPair {
        id: "1".into(),
        premise: Relation::new("Mark Zuckerburg", "says in", "Facebook"),
        hypothesis: Relation::new("Mark Zuckerburg", "owns", "Facebook"),
        label: true,
        converse_id: None,
        split: Split::Dev,
    };
    let h = honly_transform(&p, HONLY_WORD_EN);
    assert_eq!(h.premise.render(), "true");
    assert_eq!(h.hypothesis, p.hypothesis);
    assert_eq!(honly_transform(&h, HONLY_WORD_EN), h);
    assert_eq!(honly_transform(&p, HONLY_WORD_ZH).premise.render(), "正确");

    let gaz = GazetteerAssigner::from_tsv("# people\nMark Zuckerburg\tperson\n").unwrap();
    let m = mask_arguments(&p, &gaz);
    assert_eq!(m.premise.render(), format!("person says in {FALLBACK_TYPE}"));
    assert_eq!(m.hypothesis.predicate, "owns");
    assert_eq!(mask_arguments(&m, &gaz), m);
    assert!(GazetteerAssigner::from_tsv("no tab here\n").is_err());
}

#[test]
fn prompts_fill_both_directions() {
    let t = PromptTemplate::new("if", "If {premise}, then {hypothesis}.").unwrap();
    let p = pair("1", "buy", "own", true, Split::Dev);
    let out = render_prompts(&p, std::slice::from_ref(&t), true);
    assert_eq!(out.len(), 2);
    assert_eq!(out[0].text, "If x buy y, then x own y.");
    assert_eq!(out[1].direction, Direction::Reversed);
    assert_eq!(out[1].text, "If x own y, then x buy y.");
    assert_eq!(render_prompts(&p, &[t], false).len(), 1);
    assert!(PromptTemplate::new("bad", "{premise} only").is_err());
    let tricky = PromptTemplate::new("t", "{premise}|{hypothesis}").unwrap();
    assert_eq!(tricky.fill("{hypothesis}", "b"), "{hypothesis}|b");
}

#[test]
fn dev_subsplit_keeps_hypotheses_apart() {
    let dev: Vec<EntailmentPair> = (0..40)
        .map(|i| pair(&i.to_string(), "p", &format!("h{}", i % 13), i % 3 == 0, Split::Dev))
        .collect();
    let s = subsplit_dev(&dev, 20, 9);
    let train: BTreeSet<String> = s.train.iter().map(|p| p.hypothesis.key()).collect();
    assert!(s.dev.iter().all(|p| !train.contains(&p.hypothesis.key())));
    assert_eq!(s.train.len() + s.dev.len(), 40);
    assert_eq!(s, subsplit_dev(&dev, 20, 9));
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn subsplit_partitions_without_overlap(keys in prop::collection::vec(0u8..12, 0..60), size in 0usize..70, seed: u64) {
        let items: Vec<(usize, u8)> = keys.into_iter().enumerate().collect();
        let s = subsplit(&items, |it| it.1.to_string(), size, seed);
        let mut all: Vec<_> = s.train.iter().chain(&s.dev).cloned().collect();
        all.sort();
        prop_assert_eq!(&all, &items);
        let left: BTreeSet<u8> = s.train.iter().map(|i| i.1).collect();
        prop_assert!(s.dev.iter().all(|i| !left.contains(&i.1)));
        prop_assert_eq!(s.warnings.is_empty(), s.train.len() == size.min(items.len()));
    }
}
