use std::fs;
use std::path::PathBuf;

use booqa::harness::EvalResult;
use clap::{Args, ValueEnum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// One or more EvalResult JSON files; one row each.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

const COLUMNS: [&str; 9] = [
    "scorer",
    "retrieval",
    "hypotheses",
    "positives",
    "xi",
    "auc_norm",
    "auc_50",
    "max_recall",
    "coverage",
];

fn row(r: &EvalResult) -> Vec<String> {
    let pct = |x: f64| format!("{:.1}", 100.0 * x);
    vec![
        r.scorer.clone(),
        r.config.retrieval.to_string(),
        r.hypotheses.to_string(),
        r.positives.to_string(),
        format!("{:.4}", r.report.xi),
        pct(r.report.auc_norm),
        pct(r.report.auc_50),
        pct(r.max_recall()),
        pct(r.coverage),
    ]
}

fn table(rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = COLUMNS.iter().map(|c| c.len()).collect();
    for r in rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let rule = widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  ");
    let mut out = format!("{}\n{rule}\n", line(COLUMNS.to_vec()));
    for r in rows {
        out += &line(r.iter().map(String::as_str).collect());
        out.push('\n');
    }
    out
}

fn csv_cell(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn report(args: ReportArgs) -> anyhow::Result<()> {
    let mut results = Vec::new();
    for p in &args.inputs {
        let text = fs::read_to_string(p).map_err(|e| booqa::Error::io(p, e))?;
        let r: EvalResult = serde_json::from_str(&text)
            .map_err(|e| booqa::Error::InputFormat(format!("{}: not an EvalResult: {e}", p.display())))?;
        results.push(r);
    }
    let text = match args.format {
        Format::Table => table(&results.iter().map(row).collect::<Vec<_>>()),
        Format::Csv => {
            let mut out = COLUMNS.join(",") + "\n";
            for r in &results {
                out += &row(r).iter().map(|c| csv_cell(c)).collect::<Vec<_>>().join(",");
                out.push('\n');
            }
            out
        }
        Format::Json => {
            let rows: Vec<serde_json::Value> = results.iter().map(|r| r.report.to_json()).collect();
            serde_json::to_string_pretty(&rows)? + "\n"
        }
    };
    match &args.out {
        Some(p) => fs::write(p, text).map_err(|e| booqa::Error::io(p, e))?,
        None => print!("{text}"),
    }
    Ok(())
}
