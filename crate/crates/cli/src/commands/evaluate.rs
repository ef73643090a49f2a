use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use booqa::config::RetrievalMode;
use booqa::corpus::CorpusStore;
use booqa::graph::{EntailmentGraph, LookupMode};
use booqa::harness::{run_eval, BridgeClient, BridgeOptions, BridgeScorer, BridgeTarget, ConstantScorer, Scorer};
use booqa::manifest::RunManifest;
use clap::{Args, ValueEnum};

use super::{finish, load_config, read_dataset, write_json, ScorerFailed, Usage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScorerKind {
    /// Same score for every evidence item.
    Constant,
    /// Entailment-graph edge lookup.
    Eg,
    /// External process or socket speaking the line-JSON protocol.
    Bridge,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub index: PathBuf,
    /// Dataset JSONL from `sample`.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Output EvalResult JSON.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub scorer: ScorerKind,
    /// Score returned by the constant scorer.
    #[arg(long, default_value_t = 0.5)]
    pub value: f64,
    /// Entailment graph directory (for `--scorer eg`).
    #[arg(long)]
    pub graph_dir: Option<PathBuf>,
    /// Ignore role-slot assignment in graph lookups.
    #[arg(long)]
    pub fuzzy: bool,
    /// With --fuzzy, search every type-pair subgraph.
    #[arg(long, requires = "fuzzy")]
    pub cross_types: bool,
    /// `tcp://host:port` or a command line (for `--scorer bridge`).
    #[arg(long)]
    pub bridge: Option<String>,
    /// Seconds to wait for each bridge reply.
    #[arg(long, default_value_t = 60)]
    pub bridge_timeout: u64,
    #[arg(long, default_value_t = 64)]
    pub bridge_batch: usize,
    /// Declare the bridge scorer symmetric in the report.
    #[arg(long)]
    pub symmetric: bool,
    /// relation, sentence or tfidf.
    #[arg(long)]
    pub retrieval: Option<RetrievalMode>,
    /// Maximum evidence items per hypothesis.
    #[arg(long)]
    pub cap: Option<usize>,
    /// Articles retrieved per hypothesis in tfidf mode.
    #[arg(long)]
    pub tfidf_k: Option<usize>,
    /// Keep the hypothesis source sentences in the evidence pool.
    #[arg(long)]
    pub keep_sources: bool,
    /// Also write the precision-recall curve as CSV.
    #[arg(long)]
    pub curve_csv: Option<PathBuf>,
}

pub fn evaluate(args: EvaluateArgs, jobs: usize) -> anyhow::Result<()> {
    let (cfg, cfg_text) = load_config(args.config.as_deref())?;
    let mut eval = cfg.eval;
    if let Some(r) = args.retrieval {
        eval.retrieval = r;
    }
    if let Some(c) = args.cap {
        eval.evidence_cap = c;
    }
    if let Some(k) = args.tfidf_k {
        eval.tfidf_k = k;
    }
    if args.keep_sources {
        eval.exclude_sources = false;
    }
    if jobs > 0 {
        eval.jobs = jobs;
    }
    eval.validate()?;
    match args.scorer {
        ScorerKind::Eg if args.graph_dir.is_none() => return Err(Usage("--scorer eg needs --graph-dir".into()).into()),
        ScorerKind::Bridge if args.bridge.is_none() => {
            return Err(Usage("--scorer bridge needs --bridge".into()).into())
        }
        _ => {}
    }

    let mut manifest = RunManifest::new("evaluate", &format!("{cfg_text}\n{eval:?}\n{:?}", args.scorer), None);
    manifest.add_input("index", &args.index)?;
    manifest.add_input("dataset", &args.dataset)?;
    let scorer: Box<dyn Scorer> = match args.scorer {
        ScorerKind::Constant => {
            if !args.value.is_finite() {
                return Err(Usage("--value must be finite".into()).into());
            }
            Box::new(ConstantScorer { value: args.value })
        }
        ScorerKind::Eg => {
            let dir = args
                .graph_dir
                .as_ref()
                .ok_or_else(|| Usage("--scorer eg needs --graph-dir".into()))?;
            manifest.add_input("graph", dir)?;
            let graph = Arc::new(EntailmentGraph::open(dir)?);
            let mode = LookupMode {
                fuzzy: args.fuzzy,
                cross_types: args.cross_types,
            };
            Box::new(graph.as_scorer(mode))
        }
        ScorerKind::Bridge => {
            let target: BridgeTarget = args
                .bridge
                .as_deref()
                .ok_or_else(|| Usage("--scorer bridge needs --bridge".into()))?
                .parse()?;
            let options = BridgeOptions {
                timeout: Duration::from_secs(args.bridge_timeout),
                max_batch: args.bridge_batch.max(1),
                ..BridgeOptions::default()
            };
            let client = BridgeClient::connect(target, options)?;
            let id = format!("bridge:{}", args.bridge.as_deref().unwrap_or_default());
            Box::new(BridgeScorer::new(Arc::new(client), id, args.symmetric))
        }
    };

    let store = manifest.time("load", || CorpusStore::load(&args.index))?;
    let dataset = read_dataset(&args.dataset)?;
    let result = manifest.time("evaluate", || run_eval(&store, &dataset, scorer.as_ref(), &eval))?;
    log::info!(
        "{}: AUC_norm {:.4}, AUC_50 {:.4}, max recall {:.4}, coverage {:.4}",
        result.scorer,
        result.report.auc_norm,
        result.report.auc_50,
        result.max_recall(),
        result.coverage
    );
    write_json(&args.out, &result)?;
    let mut artifacts = vec![args.out.as_path()];
    if let Some(csv) = &args.curve_csv {
        std::fs::write(csv, result.report.curve_csv()).map_err(|e| booqa::Error::io(csv, e))?;
        artifacts.push(csv.as_path());
    }
    finish(&manifest, &artifacts)?;

    let failed: usize = result.results.iter().map(|r| r.score.failed).sum();
    if failed > 0 {
        return Err(ScorerFailed(format!(
            "scorer failed on {failed} evidence item(s); {} hypotheses got no score at all (results written)",
            result.scorer_failures
        ))
        .into());
    }
    Ok(())
}
