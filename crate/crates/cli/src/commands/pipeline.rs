use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use booqa::corpus::{read_articles, read_triples, CorpusStore, IngestOptions};
use booqa::harness::{BridgeClient, BridgeDisambiguator, BridgeOptions, BridgeTarget};
use booqa::lexicon::{Lexicon, SynsetStrategy};
use booqa::manifest::RunManifest;
use booqa::synthesis::{
    audit_sample, build_population, sample_dataset, split_by_time, Dataset, Proposition, SampleParams,
};
use chrono::NaiveDate;
use clap::Args;
use serde_json::json;

use super::{finish, load_config, read_dataset, sibling, write_dataset, write_json, write_jsonl, Usage};

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Articles JSONL: {"article_id","date","sentences":[{"sentence_id","text"}]}.
    #[arg(long)]
    pub articles: PathBuf,
    /// Triples JSONL: {"article_id","sentence_id","subject","predicate":[...],"object"}.
    #[arg(long)]
    pub triples: PathBuf,
    /// Output index directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// File of article ids to drop, one per line.
    #[arg(long)]
    pub exclude_articles: Option<PathBuf>,
    /// Fail with exit code 2 when any record is rejected.
    #[arg(long)]
    pub strict: bool,
}

pub fn ingest(args: IngestArgs) -> anyhow::Result<()> {
    let (cfg, cfg_text) = load_config(args.config.as_deref())?;
    let mut manifest = RunManifest::new("ingest", &cfg_text, None);
    manifest.add_input("articles", &args.articles)?;
    manifest.add_input("triples", &args.triples)?;
    let open = |p: &Path| -> anyhow::Result<BufReader<File>> {
        Ok(BufReader::new(File::open(p).map_err(|e| booqa::Error::io(p, e))?))
    };
    let (articles, mut rejected) = read_articles(open(&args.articles)?)?;
    let (triples, rejected_triples) = read_triples(open(&args.triples)?)?;
    rejected.extend(rejected_triples);

    let mut excluded = BTreeSet::new();
    if let Some(p) = &args.exclude_articles {
        manifest.add_input("exclude_articles", p)?;
        for line in open(p)?.lines() {
            let line = line?;
            if !line.trim().is_empty() {
                excluded.insert(line.trim().to_string());
            }
        }
    }
    let options = IngestOptions {
        window_span_days: cfg.synthesis.window_span_days,
        excluded_articles: excluded,
    };
    let (store, mut report) = manifest.time("ingest", || CorpusStore::ingest(articles, triples, &options))?;
    report.rejected.splice(0..0, rejected);
    for r in report.rejected.iter().take(20) {
        log::warn!("rejected {:?} at line {:?}: {}", r.kind, r.line, r.detail);
    }
    store.save(&args.out)?;
    write_json(&args.out.join("ingest_report.json"), &report)?;
    log::info!(
        "ingested {} articles, {} triples, {} windows; {} rejected",
        report.articles,
        report.triples,
        report.windows,
        report.rejected.len()
    );
    finish(&manifest, &[&args.out])?;
    if args.strict && !report.rejected.is_empty() {
        return Err(booqa::Error::InputFormat(format!("{} records rejected", report.rejected.len())).into());
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct SynthesizeArgs {
    /// Corpus index directory from `ingest`.
    #[arg(long)]
    pub index: PathBuf,
    /// JSON lexicon or WordNet dictionary directory.
    #[arg(long)]
    pub lexicon: PathBuf,
    /// Output bundle population JSONL; positives go to `<stem>.positives.jsonl`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Bridge target answering `wsd` requests; implies the external synset strategy.
    #[arg(long)]
    pub wsd_bridge: Option<String>,
}

pub fn synthesize(args: SynthesizeArgs) -> anyhow::Result<()> {
    let (mut cfg, cfg_text) = load_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.synthesis.seed = seed;
    }
    let syn = &mut cfg.synthesis;
    let mut manifest = RunManifest::new("synthesize", &cfg_text, Some(syn.seed));
    manifest.add_input("index", &args.index)?;
    manifest.add_input("lexicon", &args.lexicon)?;
    let store = manifest.time("load", || CorpusStore::load(&args.index))?;
    if store.window_span_days() != syn.window_span_days {
        log::warn!(
            "index was built with {}-day windows; config says {}",
            store.window_span_days(),
            syn.window_span_days
        );
    }
    let mut lexicon = Lexicon::load(&args.lexicon)?.with_max_span(syn.max_span);
    if let Some(target) = &args.wsd_bridge {
        let target: BridgeTarget = target.parse()?;
        let client = BridgeClient::connect(target, BridgeOptions::default())?;
        lexicon.register_disambiguator(Arc::new(BridgeDisambiguator::new(Arc::new(client))));
        syn.synset_strategy = SynsetStrategy::External;
    }
    let pop = manifest.time("synthesize", || build_population(&store, &lexicon, syn))?;
    log::info!("synthesis: {}", serde_json::to_string(&pop.stats)?);

    let positives_path = sibling(&args.out, "positives.jsonl");
    let stats_path = sibling(&args.out, "stats.json");
    write_dataset(&args.out, &Dataset::from_bundles(pop.bundles))?;
    write_jsonl(&positives_path, &pop.positives)?;
    write_json(&stats_path, &pop.stats)?;
    finish(&manifest, &[&args.out, &positives_path])
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub index: PathBuf,
    /// Bundle population JSONL from `synthesize`.
    #[arg(long)]
    pub population: PathBuf,
    /// Positive population; defaults to `<population stem>.positives.jsonl`.
    #[arg(long)]
    pub positives: Option<PathBuf>,
    /// Output dataset JSONL.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the config's target positive count.
    #[arg(long)]
    pub target: Option<usize>,
    /// Windows ending before this date go to `<stem>.dev.jsonl`, the rest to `<stem>.test.jsonl`.
    #[arg(long)]
    pub boundary: Option<NaiveDate>,
    /// Write a label-blind audit sheet with this many entries per label.
    #[arg(long)]
    pub audit_per_label: Option<usize>,
}

fn read_positives(path: &Path) -> anyhow::Result<Vec<Proposition>> {
    let f = File::open(path).map_err(|e| booqa::Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| booqa::Error::InputFormat(format!("{}:{}: {e}", path.display(), i + 1)))?,
        );
    }
    Ok(out)
}

pub fn sample(args: SampleArgs) -> anyhow::Result<()> {
    let (mut cfg, cfg_text) = load_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.synthesis.seed = seed;
    }
    if let Some(t) = args.target {
        cfg.synthesis.target_positives = t;
    }
    let boundary = args.boundary.or(cfg.synthesis.boundary_date);
    let mut manifest = RunManifest::new("sample", &cfg_text, Some(cfg.synthesis.seed));
    manifest.add_input("index", &args.index)?;
    manifest.add_input("population", &args.population)?;
    let store = CorpusStore::load(&args.index)?;
    let population = read_dataset(&args.population)?;
    let positives_path = args
        .positives
        .clone()
        .unwrap_or_else(|| sibling(&args.population, "positives.jsonl"));
    let positives = if positives_path.exists() {
        manifest.add_input("positives", &positives_path)?;
        read_positives(&positives_path)?
    } else if args.positives.is_some() {
        return Err(booqa::Error::io(&positives_path, std::io::Error::from(std::io::ErrorKind::NotFound)).into());
    } else {
        log::warn!(
            "{} not found; using the bundled positives as the population",
            positives_path.display()
        );
        population.positives().cloned().collect()
    };

    let params = SampleParams::from(&cfg.synthesis);
    let dataset = manifest.time("sample", || {
        sample_dataset(&store, &population.bundles, &positives, &params)
    })?;
    log::info!(
        "sampled {} positives and {} negatives",
        dataset.positive_count(),
        dataset.negative_count()
    );
    write_dataset(&args.out, &dataset)?;
    write_json(
        &sibling(&args.out, "diagnostics.json"),
        &json!({
            "diagnostics": dataset.diagnostics,
            "warnings": dataset.warnings,
        }),
    )?;
    let mut artifacts = vec![args.out.clone()];
    if let Some(b) = boundary {
        let (dev, test) = split_by_time(&store, &dataset, b)?;
        let (dp, tp) = (sibling(&args.out, "dev.jsonl"), sibling(&args.out, "test.jsonl"));
        write_dataset(&dp, &dev)?;
        write_dataset(&tp, &test)?;
        log::info!(
            "time split at {b}: {} dev / {} test bundles",
            dev.bundles.len(),
            test.bundles.len()
        );
        artifacts.extend([dp, tp]);
    }
    if let Some(n) = args.audit_per_label {
        if n == 0 {
            return Err(Usage("--audit-per-label must be at least 1".into()).into());
        }
        let audit = audit_sample(&dataset, n, cfg.synthesis.seed);
        let sheet = sibling(&args.out, "audit.jsonl");
        write_jsonl(&sheet, audit.iter().map(|a| a.sheet_json()))?;
        write_jsonl(&sibling(&args.out, "audit_key.jsonl"), &audit)?;
        artifacts.push(sheet);
    }
    let refs: Vec<&Path> = artifacts.iter().map(PathBuf::as_path).collect();
    finish(&manifest, &refs)
}
