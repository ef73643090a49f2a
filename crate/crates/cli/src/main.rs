mod commands;
mod logger;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{ScorerFailed, Usage};

/// Boolean open-QA benchmark synthesis and directional entailment evaluation.
#[derive(Debug, Parser)]
#[command(name = "booqa", version, about)]
struct Cli {
    /// Log verbosity: error, warn, info, debug or trace.
    #[arg(long, global = true, default_value = "info")]
    log_level: log::Level,

    /// Write JSONL logs here instead of stderr.
    #[arg(long, global = true)]
    log_file: Option<PathBuf>,

    /// Worker threads for every parallel stage; 0 uses all cores.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate articles and triples and build a corpus index directory.
    Ingest(commands::pipeline::IngestArgs),
    /// Select positives, generate and filter negatives, and bundle them.
    Synthesize(commands::pipeline::SynthesizeArgs),
    /// Draw a frequency-matched dataset from a bundle population.
    Sample(commands::pipeline::SampleArgs),
    /// Retrieve evidence, score hypotheses and compute the metric report.
    Evaluate(commands::evaluate::EvaluateArgs),
    /// Hypothesis-only probe: mask premises and arguments, optionally score with a trainer bridge.
    Probe(commands::mesh::ProbeArgs),
    /// Build the converse-derived sub-group mesh from LevyHolt-style splits.
    Mesh(commands::mesh::MeshArgs),
    /// Render evaluation results as a table, CSV or JSON.
    Report(commands::report::ReportArgs),
}

fn run(cli: Cli) -> anyhow::Result<()> {
    logger::init(cli.log_level, cli.log_file.as_deref())?;
    if cli.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global()
            .map_err(|e| Usage(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Ingest(a) => commands::pipeline::ingest(a),
        Command::Synthesize(a) => commands::pipeline::synthesize(a),
        Command::Sample(a) => commands::pipeline::sample(a),
        Command::Evaluate(a) => commands::evaluate::evaluate(a, cli.jobs),
        Command::Probe(a) => commands::mesh::probe(a),
        Command::Mesh(a) => commands::mesh::mesh(a),
        Command::Report(a) => commands::report::report(a),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<Usage>() {
            return 1;
        }
        if cause.is::<ScorerFailed>() {
            return 3;
        }
        if let Some(e) = cause.downcast_ref::<booqa::Error>() {
            return match e {
                booqa::Error::InvalidArgument(_) | booqa::Error::NoDisambiguator => 1,
                booqa::Error::Bridge(_) => 3,
                _ => 2,
            };
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let code = exit_code(&err);
            log::error!("{err:#}");
            eprintln!("error: {err:#}");
            ExitCode::from(code)
        }
    }
}
