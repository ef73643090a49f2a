//! Graph directory layout and edge-file readers.
//!
//! Native format: one edge per line, `premise<TAB>hypothesis<TAB>score`,
//! where both nodes are role forms such as `(shop.1,shop.in.2)`, optionally
//! suffixed by `#type1#type2`. The `sims` adapter reads neighbour-list files
//! made of `predicate: <node>` headers followed by `<label> sims` sections of
//! `<node> <score>` rows.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LoadReport, Subgraph, TypedPredicate};
use crate::error::{Error, Result};

pub const GRAPH_FORMAT: &str = "booqa-eg";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubgraphFormat {
    Tsv,
    Sims,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubgraphEntry {
    pub types: [String; 2],
    /// Relative to the graph directory.
    pub file: String,
    #[serde(default = "default_format")]
    pub format: SubgraphFormat,
}

fn default_format() -> SubgraphFormat {
    SubgraphFormat::Tsv
}

/// `manifest.json` of a graph directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphManifest {
    pub format: String,
    pub version: u32,
    pub provenance: String,
    /// Which `<label> sims` section to read from sims files; first section when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sims_label: Option<String>,
    pub subgraphs: Vec<SubgraphEntry>,
}

fn types_from_name(name: &str) -> Option<[String; 2]> {
    let stem = name
        .strip_suffix(".tsv")
        .or_else(|| name.strip_suffix("_sims.txt"))
        .or_else(|| name.strip_suffix("_sim.txt"))
        .unwrap_or(name);
    let (a, b) = stem.split_once('#')?;
    if a.is_empty() || b.is_empty() || b.contains('#') {
        return None;
    }
    Some([a.to_string(), b.to_string()])
}

fn file_format(name: &str) -> Option<SubgraphFormat> {
    if name.ends_with(".tsv") {
        Some(SubgraphFormat::Tsv)
    } else if name.ends_with("_sims.txt") || name.ends_with("_sim.txt") {
        Some(SubgraphFormat::Sims)
    } else {
        None
    }
}

fn sorted_entries(dir: &Path) -> Result<Vec<fs::DirEntry>> {
    let mut entries: Vec<_> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .collect::<std::io::Result<_>>()
        .map_err(|e| Error::io(dir, e))?;
    entries.sort_by_key(|e| e.file_name());
    Ok(entries)
}

pub(super) fn discover(dir: &Path) -> Result<GraphManifest> {
    let manifest_path = dir.join("manifest.json");
    if manifest_path.exists() {
        let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
        let manifest: GraphManifest =
            serde_json::from_str(&text).map_err(|e| Error::InputFormat(format!("{}: {e}", manifest_path.display())))?;
        if manifest.format != GRAPH_FORMAT {
            return Err(Error::InputFormat(format!(
                "{}: unknown graph format `{}`",
                manifest_path.display(),
                manifest.format
            )));
        }
        return Ok(manifest);
    }

    let mut subgraphs = Vec::new();
    for entry in sorted_entries(dir)? {
        let name = entry.file_name().to_string_lossy().into_owned();
        let path = entry.path();
        if path.is_dir() {
            let Some(types) = types_from_name(&name) else { continue };
            for inner in sorted_entries(&path)? {
                let inner_name = inner.file_name().to_string_lossy().into_owned();
                if let Some(format) = file_format(&inner_name) {
                    subgraphs.push(SubgraphEntry {
                        types: types.clone(),
                        file: format!("{name}/{inner_name}"),
                        format,
                    });
                }
            }
        } else if let (Some(types), Some(format)) = (types_from_name(&name), file_format(&name)) {
            subgraphs.push(SubgraphEntry {
                types,
                file: name,
                format,
            });
        }
    }
    if subgraphs.is_empty() {
        return Err(Error::InputFormat(format!(
            "no manifest.json and no type-pair edge files in {}",
            dir.display()
        )));
    }
    Ok(GraphManifest {
        format: GRAPH_FORMAT.into(),
        version: 1,
        provenance: dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "custom".into()),
        sims_label: None,
        subgraphs,
    })
}

fn role_form(node: &str) -> Option<String> {
    TypedPredicate::parse(node).ok().map(|t| t.role_form)
}

fn read_tsv(text: &str, graph: &mut Subgraph, report: &mut LoadReport) {
    for line in text.lines() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let parsed = match fields.as_slice() {
            [a, b, s] => match (role_form(a), role_form(b), s.trim().parse::<f64>()) {
                (Some(a), Some(b), Ok(s)) if s.is_finite() => Some((a, b, s)),
                _ => None,
            },
            _ => None,
        };
        match parsed {
            Some((a, b, s)) => {
                if graph.insert_edge(&a, &b, s) {
                    report.duplicate_edges += 1;
                }
            }
            None => report.malformed_lines += 1,
        }
    }
}

fn read_sims(text: &str, label: Option<&str>, graph: &mut Subgraph, report: &mut LoadReport) {
    let wanted = label.map(str::to_lowercase);
    let mut current: Option<String> = None;
    let mut active = false;
    let mut sections_seen = 0usize;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(node) = line.strip_prefix("predicate:") {
            current = role_form(node.trim());
            if current.is_none() {
                report.malformed_lines += 1;
            }
            active = false;
            sections_seen = 0;
            continue;
        }
        if line.starts_with("num_neighbors") {
            continue;
        }
        let lower = line.to_lowercase();
        if lower.ends_with(" sims") || lower == "sims" {
            sections_seen += 1;
            active = match &wanted {
                Some(w) => lower.trim_end_matches("sims").trim() == w.as_str(),
                None => sections_seen == 1,
            };
            continue;
        }
        if !active {
            continue;
        }
        let Some(from) = &current else { continue };
        let parsed = line
            .rsplit_once(char::is_whitespace)
            .and_then(|(node, s)| Some((role_form(node.trim())?, s.parse::<f64>().ok()?)))
            .filter(|(_, s)| s.is_finite());
        match parsed {
            Some((to, s)) => {
                if graph.insert_edge(from, &to, s) {
                    report.duplicate_edges += 1;
                }
            }
            None => report.malformed_lines += 1,
        }
    }
}

pub(super) fn load_subgraph(
    sources: &[(std::path::PathBuf, SubgraphFormat)],
    sims_label: Option<&str>,
) -> Result<(Subgraph, LoadReport)> {
    let mut graph = Subgraph::default();
    let mut report = LoadReport {
        subgraphs: 1,
        ..Default::default()
    };
    for (path, format) in sources {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let before = report.malformed_lines;
        match format {
            SubgraphFormat::Tsv => read_tsv(&text, &mut graph, &mut report),
            SubgraphFormat::Sims => read_sims(&text, sims_label, &mut graph, &mut report),
        }
        if report.malformed_lines > before {
            report.warnings.push(format!(
                "{}: {} malformed line(s) rejected",
                path.display(),
                report.malformed_lines - before
            ));
        }
        if report.duplicate_edges > 0 {
            log::debug!(
                "{}: {} duplicate edge(s), last wins",
                path.display(),
                report.duplicate_edges
            );
        }
    }
    report.nodes = graph.node_count();
    report.edges = graph.edge_count();
    report.approx_bytes = graph.approx_bytes();
    Ok((graph, report))
}

/// Groups manifest entries by type pair, keeping file order.
pub(super) fn group_entries(
    dir: &Path,
    entries: &[SubgraphEntry],
) -> BTreeMap<(String, String), Vec<(std::path::PathBuf, SubgraphFormat)>> {
    let mut out: BTreeMap<_, Vec<_>> = BTreeMap::new();
    for e in entries {
        out.entry((e.types[0].clone(), e.types[1].clone()))
            .or_default()
            .push((dir.join(&e.file), e.format));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tsv_reader_counts_malformed_and_duplicates() {
        let text = "(shop.1,shop.in.2)\t(go.1,go.to.2)\t0.8\n\
                    (go.1,go.to.2)#person#location\t(shop.1,shop.in.2)#person#location\t0.1\n\
                    garbage line\n\
                    (a.1,a.2)\t(b.1,b.2)\tNaN\n\
                    (shop.1,shop.in.2)\t(go.1,go.to.2)\t0.9\n";
        let mut g = Subgraph::default();
        let mut r = LoadReport::default();
        read_tsv(text, &mut g, &mut r);
        assert_eq!(r.malformed_lines, 2);
        assert_eq!(r.duplicate_edges, 1);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.exact("(shop.1,shop.in.2)", "(go.1,go.to.2)"), Some(0.9));
    }

    #[test]
    fn sims_reader_selects_section() {
        let text = "predicate: (shop.1,shop.in.2)#person#location\nnum_neighbors: 2\n\n\
                    BInc sims\n(go.1,go.to.2)#person#location 0.43\n(visit.1,visit.2)#person#location 0.2\n\n\
                    global sims\n(go.1,go.to.2)#person#location 0.9\n\n\
                    predicate: (go.1,go.to.2)#person#location\nnum_neighbors: 1\n\n\
                    BInc sims\n(travel.1,travel.to.2)#person#location 0.5\n";
        let mut g = Subgraph::default();
        let mut r = LoadReport::default();
        read_sims(text, None, &mut g, &mut r);
        assert_eq!(g.edge_count(), 3);
        assert_eq!(g.exact("(shop.1,shop.in.2)", "(go.1,go.to.2)"), Some(0.43));

        let mut g = Subgraph::default();
        read_sims(text, Some("global"), &mut g, &mut r);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.exact("(shop.1,shop.in.2)", "(go.1,go.to.2)"), Some(0.9));
    }

    #[test]
    fn type_pair_names() {
        assert_eq!(
            types_from_name("person#location.tsv"),
            Some(["person".to_string(), "location".to_string()])
        );
        assert_eq!(
            types_from_name("person#location_sims.txt"),
            Some(["person".to_string(), "location".to_string()])
        );
        assert_eq!(types_from_name("readme.tsv"), None);
    }
}
