use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use booqa::harness::{BridgeClient, BridgeOptions, BridgeTarget};
use booqa::manifest::RunManifest;
use booqa::mesh::{
    all_subsets, classify_subgroups, fix_split_leakage, honly_transform, link_converses, mask_arguments,
    read_levyholt_file, render_prompts, subsplit_dev, BridgeTypeAssigner, ColumnOrder, EntailmentPair,
    GazetteerAssigner, PromptTemplate, Relation, Split, TypeAssigner, HONLY_WORD_EN, HONLY_WORD_ZH,
};
use booqa::metrics::{zero_evidence_rank, AucReport};
use clap::{Args, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Value};

use super::{finish, read_dataset, write_json, write_jsonl, ScorerFailed, Usage};

#[derive(Debug, Args)]
pub struct MeshArgs {
    /// LevyHolt-style TSV of the train split.
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub dev: Option<PathBuf>,
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Input columns are hypothesis first, then premise.
    #[arg(long)]
    pub hypothesis_first: bool,
    /// Seed for repairing converse pairs that straddle splits.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Leave straddling converse pairs where they are.
    #[arg(long)]
    pub keep_leakage: bool,
    /// JSON array of {"id","text"} prompt templates with {premise} and {hypothesis} slots.
    #[arg(long)]
    pub templates: Option<PathBuf>,
    /// Add the premise/hypothesis-swapped counterpart of every prompt.
    #[arg(long, requires = "templates")]
    pub symmetric: bool,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

fn order(hypothesis_first: bool) -> ColumnOrder {
    if hypothesis_first {
        ColumnOrder::HypothesisFirst
    } else {
        ColumnOrder::PremiseFirst
    }
}

pub fn mesh(args: MeshArgs) -> anyhow::Result<()> {
    let inputs: Vec<(Split, &PathBuf)> = [
        (Split::Train, &args.train),
        (Split::Dev, &args.dev),
        (Split::Test, &args.test),
    ]
    .into_iter()
    .filter_map(|(s, p)| p.as_ref().map(|p| (s, p)))
    .collect();
    if inputs.is_empty() {
        return Err(Usage("give at least one of --train, --dev, --test".into()).into());
    }
    let mut manifest = RunManifest::new(
        "mesh",
        &format!("{:?} {}", order(args.hypothesis_first), args.keep_leakage),
        Some(args.seed),
    );
    let mut pairs = Vec::new();
    for (split, path) in &inputs {
        manifest.add_input(&split.to_string(), path)?;
        pairs.extend(read_levyholt_file(path, *split, order(args.hypothesis_first))?);
    }
    let linked = link_converses(&mut pairs);
    let repaired = if args.keep_leakage {
        0
    } else {
        fix_split_leakage(&mut pairs, args.seed)
    };
    let classes = classify_subgroups(&pairs);
    log::info!(
        "{} entries, {linked} converse-linked, {} unpaired, {repaired} straddling pairs repaired",
        pairs.len(),
        classes.unpaired.len()
    );

    fs::create_dir_all(&args.out).map_err(|e| booqa::Error::io(&args.out, e))?;
    let mut artifacts = Vec::new();
    for (name, entries) in all_subsets(&pairs, &classes)? {
        let path = args.out.join(name);
        write_jsonl(&path, &entries)?;
        artifacts.push(path);
    }
    let mut counts: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    for ((split, group), n) in classes.counts(&pairs) {
        counts
            .entry(split.to_string())
            .or_default()
            .insert(group.to_string(), n);
    }
    let summary = args.out.join("summary.json");
    write_json(
        &summary,
        &json!({
            "entries": pairs.len(),
            "linked": linked,
            "repaired": repaired,
            "unpaired": classes.unpaired,
            "counts": counts,
        }),
    )?;
    artifacts.push(summary);

    if let Some(tpath) = &args.templates {
        #[derive(Deserialize)]
        struct RawTemplate {
            id: String,
            text: String,
        }
        let text = fs::read_to_string(tpath).map_err(|e| booqa::Error::io(tpath, e))?;
        let raw: Vec<RawTemplate> =
            serde_json::from_str(&text).map_err(|e| booqa::Error::InputFormat(format!("{}: {e}", tpath.display())))?;
        let templates = raw
            .iter()
            .map(|t| PromptTemplate::new(&t.id, &t.text))
            .collect::<booqa::Result<Vec<_>>>()?;
        manifest.add_input("templates", tpath)?;
        let rows = pairs
            .iter()
            .filter(|p| classes.groups.contains_key(&p.id))
            .flat_map(|p| {
                render_prompts(p, &templates, args.symmetric)
                    .into_iter()
                    .map(move |inst| {
                        json!({"id": p.id, "split": p.split, "label": p.label, "template_id": inst.template_id,
                       "direction": inst.direction, "text": inst.text})
                    })
            });
        let path = args.out.join("prompts.jsonl");
        write_jsonl(&path, rows)?;
        artifacts.push(path);
    }
    let refs: Vec<&std::path::Path> = artifacts.iter().map(PathBuf::as_path).collect();
    finish(&manifest, &refs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Lang {
    En,
    Zh,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    /// LevyHolt-style TSV to probe.
    #[arg(long, conflicts_with = "dataset")]
    pub levyholt: Option<PathBuf>,
    /// Split name recorded on LevyHolt entries.
    #[arg(long, default_value = "dev")]
    pub split: Split,
    #[arg(long)]
    pub hypothesis_first: bool,
    /// Benchmark dataset JSONL to probe instead; each proposition becomes a hypothesis.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Mask word language for the premise.
    #[arg(long, value_enum, default_value = "en")]
    pub lang: Lang,
    /// `argument<TAB>type` table for argument masking.
    #[arg(long, conflicts_with = "typer")]
    pub gazetteer: Option<PathBuf>,
    /// Bridge target answering `type` requests for argument masking.
    #[arg(long)]
    pub typer: Option<String>,
    /// Keep arguments unmasked.
    #[arg(long, conflicts_with_all = ["gazetteer", "typer"])]
    pub no_mask: bool,
    /// Sub-split into train.jsonl of this size and dev2.jsonl with the rest.
    #[arg(long)]
    pub subsplit_train: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Bridge to an already trained H-only scorer; scores dev2 (or everything) and writes probe_report.json.
    #[arg(long)]
    pub trainer: Option<String>,
    #[arg(long, default_value_t = 600)]
    pub trainer_timeout: u64,
    #[arg(long)]
    pub out: PathBuf,
}

fn dataset_pairs(path: &Path) -> anyhow::Result<Vec<EntailmentPair>> {
    let d = read_dataset(path)?;
    Ok(d.propositions()
        .map(|p| EntailmentPair {
            id: p.proposition_id.clone(),
            premise: Relation::new("", "", ""),
            hypothesis: Relation::new(&p.subject, &p.predicate.join(" "), &p.object),
            label: p.label.is_positive(),
            converse_id: None,
            split: Split::Test,
        })
        .collect())
}

pub fn probe(args: ProbeArgs) -> anyhow::Result<()> {
    let mut manifest = RunManifest::new("probe", &format!("{:?} {}", args.lang, args.no_mask), Some(args.seed));
    let pairs = match (&args.levyholt, &args.dataset) {
        (Some(p), _) => {
            manifest.add_input("levyholt", p)?;
            read_levyholt_file(p, args.split, order(args.hypothesis_first))?
        }
        (None, Some(p)) => {
            manifest.add_input("dataset", p)?;
            dataset_pairs(p)?
        }
        (None, None) => return Err(Usage("give --levyholt or --dataset".into()).into()),
    };
    let assigner: Option<Box<dyn TypeAssigner>> = if args.no_mask {
        None
    } else if let Some(g) = &args.gazetteer {
        manifest.add_input("gazetteer", g)?;
        let text = fs::read_to_string(g).map_err(|e| booqa::Error::io(g, e))?;
        Some(Box::new(GazetteerAssigner::from_tsv(&text)?))
    } else if let Some(t) = &args.typer {
        let client = BridgeClient::connect(t.parse::<BridgeTarget>()?, BridgeOptions::default())?;
        Some(Box::new(BridgeTypeAssigner::new(Arc::new(client))))
    } else {
        log::warn!("no gazetteer or typer given; every argument is masked as the fallback type");
        Some(Box::new(GazetteerAssigner::default()))
    };
    let word = match args.lang {
        Lang::En => HONLY_WORD_EN,
        Lang::Zh => HONLY_WORD_ZH,
    };
    let transformed: Vec<EntailmentPair> = pairs
        .iter()
        .map(|p| {
            let p = honly_transform(p, word);
            match &assigner {
                Some(a) => mask_arguments(&p, a.as_ref()),
                None => p,
            }
        })
        .collect();

    fs::create_dir_all(&args.out).map_err(|e| booqa::Error::io(&args.out, e))?;
    let all = args.out.join("honly.jsonl");
    write_jsonl(&all, &transformed)?;
    let mut artifacts = vec![all];
    let mut eval_set = transformed.clone();
    if let Some(n) = args.subsplit_train {
        let s = subsplit_dev(&transformed, n, args.seed);
        let (tp, dp) = (args.out.join("train.jsonl"), args.out.join("dev2.jsonl"));
        write_jsonl(&tp, &s.train)?;
        write_jsonl(&dp, &s.dev)?;
        artifacts.extend([tp, dp]);
        eval_set = s.dev;
    }

    let mut failure = None;
    if let Some(t) = &args.trainer {
        let options = BridgeOptions {
            timeout: Duration::from_secs(args.trainer_timeout),
            ..BridgeOptions::default()
        };
        let client = BridgeClient::connect(t.parse::<BridgeTarget>()?, options)?;
        let items: Vec<Value> = eval_set
            .iter()
            .map(|p| json!({"premise": p.premise.render(), "hypothesis": p.hypothesis.render()}))
            .collect();
        let scores = client.call_batched("score", &items)?;
        let mut entries = Vec::with_capacity(scores.len());
        let mut invalid = 0;
        for (v, p) in scores.iter().zip(&eval_set) {
            let s = v.as_f64().filter(|x| x.is_finite());
            if s.is_none() && !v.is_null() {
                invalid += 1;
            }
            entries.push((s, p.label));
        }
        let report = AucReport::compute(&zero_evidence_rank(&entries)?)?;
        log::info!(
            "H-only probe: AUC_norm {:.4} over {} entries",
            report.auc_norm,
            entries.len()
        );
        let path = args.out.join("probe_report.json");
        write_json(
            &path,
            &json!({"trainer": t, "entries": entries.len(), "invalid_scores": invalid, "report": report}),
        )?;
        artifacts.push(path);
        if invalid > 0 {
            failure = Some(ScorerFailed(format!("trainer returned {invalid} non-numeric score(s)")));
        }
    }
    let refs: Vec<&std::path::Path> = artifacts.iter().map(PathBuf::as_path).collect();
    finish(&manifest, &refs)?;
    match failure {
        Some(f) => Err(f.into()),
        None => Ok(()),
    }
}
