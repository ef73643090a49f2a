//! Discrete entailment graphs: typed-predicate nodes with directed weighted
//! edges, partitioned by argument-type pair. Subgraphs load lazily on first
//! access; lookups are exact (typed node equality) or fuzzy (surface form
//! only, ignoring role-slot assignment, max over matching node pairs).

mod format;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{Capabilities, Scorer, ScoringItem};
use crate::text::base_form;

pub use format::{GraphManifest, SubgraphEntry, SubgraphFormat, GRAPH_FORMAT};

/// Ordered (subject type, object type).
pub type TypePair = (String, String);

pub fn type_pair_key(types: &TypePair) -> String {
    format!("{}#{}", types.0, types.1)
}

/// A predicate with its two role slots, e.g. `(go.1,go.to.2)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TypedPredicate {
    pub role_form: String,
    pub types: TypePair,
}

fn sanitize(token: &str) -> String {
    token
        .to_lowercase()
        .chars()
        .map(|c| {
            if matches!(c, '.' | ',' | '(' | ')' | '#') || c.is_whitespace() {
                '_'
            } else {
                c
            }
        })
        .collect()
}

impl TypedPredicate {
    /// Parses `(a.1,a.b.2)` optionally suffixed with `#type1#type2`.
    pub fn parse(node: &str) -> Result<Self> {
        let mut parts = node.trim().split('#');
        let role = parts.next().unwrap_or_default();
        let types = match (parts.next(), parts.next()) {
            (Some(a), Some(b)) => (a.to_string(), b.to_string()),
            _ => (
                crate::harness::DEFAULT_ARG_TYPE.to_string(),
                crate::harness::DEFAULT_ARG_TYPE.to_string(),
            ),
        };
        Self::parse_with_types(role, types)
    }

    pub fn parse_with_types(role_form: &str, types: TypePair) -> Result<Self> {
        let tp = TypedPredicate {
            role_form: role_form.trim().to_string(),
            types,
        };
        let (a, b) = tp.slots()?;
        if a.is_empty() && b.is_empty() {
            return Err(Error::InputFormat(format!("empty predicate `{role_form}`")));
        }
        Ok(tp)
    }

    /// Default role assignment for a surface predicate: subject slot on the
    /// head token, object slot on the whole predicate.
    pub fn from_surface<S: AsRef<str>>(tokens: &[S], types: TypePair) -> Self {
        let toks: Vec<String> = tokens.iter().map(|t| sanitize(t.as_ref())).collect();
        let head = toks.first().cloned().unwrap_or_default();
        TypedPredicate {
            role_form: format!("({head}.1,{}.2)", toks.join(".")),
            types,
        }
    }

    /// The two role slots' tokens, role indices stripped.
    pub fn slots(&self) -> Result<(Vec<String>, Vec<String>)> {
        let inner = self
            .role_form
            .strip_prefix('(')
            .and_then(|s| s.strip_suffix(')'))
            .ok_or_else(|| Error::InputFormat(format!("not a typed predicate: `{}`", self.role_form)))?;
        let slots: Vec<&str> = inner.split(',').collect();
        if slots.len() != 2 {
            return Err(Error::InputFormat(format!(
                "typed predicate `{}` must have exactly two role slots",
                self.role_form
            )));
        }
        let parse_slot = |slot: &str| -> Vec<String> {
            let mut toks: Vec<String> = slot.split('.').filter(|t| !t.is_empty()).map(String::from).collect();
            if toks.last().is_some_and(|t| t.chars().all(|c| c.is_ascii_digit())) {
                toks.pop();
            }
            toks
        };
        Ok((parse_slot(slots[0]), parse_slot(slots[1])))
    }

    /// Role-insensitive lemma form, e.g. `go to` for `(go.1,go.to.2)`.
    pub fn surface(&self) -> String {
        let Ok((a, b)) = self.slots() else {
            return String::new();
        };
        let longest = if b.len() > a.len() { b } else { a };
        longest
            .iter()
            .flat_map(|t| t.split('_'))
            .filter(|t| !t.is_empty())
            .map(base_form)
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Same predicate seen with its arguments in the other order.
    pub fn swapped(&self) -> TypedPredicate {
        let role_form = match self
            .role_form
            .strip_prefix('(')
            .and_then(|s| s.strip_suffix(')'))
            .and_then(|s| s.split_once(','))
        {
            Some((a, b)) => format!("({b},{a})"),
            None => self.role_form.clone(),
        };
        TypedPredicate {
            role_form,
            types: (self.types.1.clone(), self.types.0.clone()),
        }
    }
}

impl fmt::Display for TypedPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}#{}", self.role_form, self.types.0, self.types.1)
    }
}

#[derive(Debug, Default, Clone)]
pub struct Subgraph {
    nodes: Vec<String>,
    node_index: HashMap<String, usize>,
    by_surface: HashMap<String, Vec<usize>>,
    adjacency: Vec<HashMap<usize, f64>>,
    edge_count: usize,
}

impl Subgraph {
    fn node(&mut self, role_form: &str) -> usize {
        if let Some(&i) = self.node_index.get(role_form) {
            return i;
        }
        let i = self.nodes.len();
        self.nodes.push(role_form.to_string());
        self.node_index.insert(role_form.to_string(), i);
        let surface = TypedPredicate {
            role_form: role_form.to_string(),
            types: Default::default(),
        }
        .surface();
        self.by_surface.entry(surface).or_default().push(i);
        self.adjacency.push(HashMap::new());
        i
    }

    /// Inserts or overwrites an edge; returns true when it overwrote one.
    fn insert_edge(&mut self, from: &str, to: &str, score: f64) -> bool {
        let (a, b) = (self.node(from), self.node(to));
        let replaced = self.adjacency[a].insert(b, score).is_some();
        if !replaced {
            self.edge_count += 1;
        }
        replaced
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    fn edge(&self, from: usize, to: usize) -> Option<f64> {
        self.adjacency[from].get(&to).copied()
    }

    fn exact(&self, premise: &str, hypothesis: &str) -> Option<f64> {
        let a = *self.node_index.get(premise)?;
        let b = *self.node_index.get(hypothesis)?;
        self.edge(a, b)
    }

    fn fuzzy(&self, premise_surface: &str, hypothesis_surface: &str) -> Option<f64> {
        let from = self.by_surface.get(premise_surface)?;
        let to = self.by_surface.get(hypothesis_surface)?;
        from.iter()
            .flat_map(|&a| to.iter().filter_map(move |&b| self.edge(a, b)))
            .reduce(f64::max)
    }

    fn approx_bytes(&self) -> usize {
        let strings: usize = self.nodes.iter().map(|n| 2 * n.len() + 48).sum();
        strings + self.edge_count * 24 + self.nodes.len() * 64
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub subgraphs: usize,
    pub nodes: usize,
    pub edges: usize,
    pub malformed_lines: usize,
    pub duplicate_edges: usize,
    pub approx_bytes: usize,
    pub warnings: Vec<String>,
}

impl LoadReport {
    fn absorb(&mut self, other: &LoadReport) {
        self.subgraphs += other.subgraphs;
        self.nodes += other.nodes;
        self.edges += other.edges;
        self.malformed_lines += other.malformed_lines;
        self.duplicate_edges += other.duplicate_edges;
        self.approx_bytes += other.approx_bytes;
        self.warnings.extend(other.warnings.iter().cloned());
    }
}

#[derive(Debug)]
struct SubgraphSlot {
    sources: Vec<(PathBuf, SubgraphFormat)>,
    loaded: OnceLock<Result<(Subgraph, LoadReport), String>>,
}

impl SubgraphSlot {
    fn ready(graph: Subgraph, report: LoadReport) -> Self {
        let slot = SubgraphSlot {
            sources: Vec::new(),
            loaded: OnceLock::new(),
        };
        let _ = slot.loaded.set(Ok((graph, report)));
        slot
    }

    fn get(&self, sims_label: Option<&str>) -> Result<&(Subgraph, LoadReport)> {
        self.loaded
            .get_or_init(|| format::load_subgraph(&self.sources, sims_label).map_err(|e| e.to_string()))
            .as_ref()
            .map_err(|e| Error::InputFormat(e.clone()))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LookupMode {
    pub fuzzy: bool,
    /// Fuzzy only: search every type-pair subgraph, not just the query's.
    pub cross_types: bool,
}

impl LookupMode {
    pub fn exact() -> Self {
        LookupMode::default()
    }

    pub fn fuzzy() -> Self {
        LookupMode {
            fuzzy: true,
            cross_types: false,
        }
    }
}

#[derive(Debug)]
pub struct EntailmentGraph {
    provenance: String,
    sims_label: Option<String>,
    subgraphs: BTreeMap<TypePair, SubgraphSlot>,
}

impl EntailmentGraph {
    pub fn from_edges(
        provenance: &str,
        edges: impl IntoIterator<Item = (TypedPredicate, TypedPredicate, f64)>,
    ) -> Result<(EntailmentGraph, LoadReport)> {
        let mut parts: BTreeMap<TypePair, (Subgraph, LoadReport)> = BTreeMap::new();
        for (from, to, score) in edges {
            if !score.is_finite() {
                return Err(Error::InvalidArgument(format!("edge score {score} is not finite")));
            }
            let entry = parts.entry(from.types.clone()).or_default();
            if entry.0.insert_edge(&from.role_form, &to.role_form, score) {
                entry.1.duplicate_edges += 1;
            }
        }
        let mut report = LoadReport::default();
        let subgraphs = parts
            .into_iter()
            .map(|(k, (g, mut r))| {
                r.subgraphs = 1;
                r.nodes = g.node_count();
                r.edges = g.edge_count();
                r.approx_bytes = g.approx_bytes();
                report.absorb(&r);
                (k, SubgraphSlot::ready(g, r))
            })
            .collect();
        if report.edges == 0 {
            report.warnings.push("graph has no edges".into());
        }
        Ok((
            EntailmentGraph {
                provenance: provenance.to_string(),
                sims_label: None,
                subgraphs,
            },
            report,
        ))
    }

    /// Opens a graph directory without reading any edges. See [`GraphManifest`]
    /// for the layout; directories without a manifest are scanned for
    /// `<type1>#<type2>` subdirectories or `<type1>#<type2>.tsv` files.
    pub fn open(dir: &Path) -> Result<EntailmentGraph> {
        let manifest = format::discover(dir)?;
        let subgraphs = format::group_entries(dir, &manifest.subgraphs)
            .into_iter()
            .map(|(types, sources)| {
                (
                    types,
                    SubgraphSlot {
                        sources,
                        loaded: OnceLock::new(),
                    },
                )
            })
            .collect();
        Ok(EntailmentGraph {
            provenance: manifest.provenance,
            sims_label: manifest.sims_label,
            subgraphs,
        })
    }

    /// Opens and eagerly loads every subgraph, in parallel.
    pub fn load(dir: &Path) -> Result<(EntailmentGraph, LoadReport)> {
        let graph = Self::open(dir)?;
        let report = graph.load_all()?;
        Ok((graph, report))
    }

    pub fn load_all(&self) -> Result<LoadReport> {
        let label = self.sims_label.as_deref();
        let parts: Vec<LoadReport> = self
            .subgraphs
            .par_iter()
            .map(|(_, slot)| slot.get(label).map(|(_, r)| r.clone()))
            .collect::<Result<_>>()?;
        let mut report = LoadReport::default();
        for r in &parts {
            report.absorb(r);
        }
        if report.edges == 0 {
            report.warnings.push("graph has no edges".into());
        }
        Ok(report)
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn type_pairs(&self) -> impl Iterator<Item = &TypePair> {
        self.subgraphs.keys()
    }

    pub fn loaded_subgraphs(&self) -> usize {
        self.subgraphs.values().filter(|s| s.loaded.get().is_some()).count()
    }

    fn subgraph(&self, types: &TypePair) -> Option<&Subgraph> {
        let slot = self.subgraphs.get(types)?;
        match slot.get(self.sims_label.as_deref()) {
            Ok((g, _)) => Some(g),
            Err(e) => {
                log::warn!("subgraph {} unavailable: {e}", type_pair_key(types));
                None
            }
        }
    }

    /// Directed edge score premise -> hypothesis, or `None` to abstain.
    pub fn lookup(&self, premise: &TypedPredicate, hypothesis: &TypedPredicate, mode: LookupMode) -> Option<f64> {
        if !mode.fuzzy {
            return self
                .subgraph(&hypothesis.types)?
                .exact(&premise.role_form, &hypothesis.role_form);
        }
        let (ps, hs) = (premise.surface(), hypothesis.surface());
        let reversed = (hypothesis.types.1.clone(), hypothesis.types.0.clone());
        let candidates: Vec<&TypePair> = if mode.cross_types {
            self.subgraphs.keys().collect()
        } else if reversed == hypothesis.types {
            vec![&hypothesis.types]
        } else {
            vec![&hypothesis.types, &reversed]
        };
        candidates
            .into_iter()
            .filter_map(|t| self.subgraph(t)?.fuzzy(&ps, &hs))
            .reduce(f64::max)
    }

    pub fn as_scorer(self: &Arc<Self>, mode: LookupMode) -> EgScorer {
        EgScorer {
            graph: Arc::clone(self),
            mode,
            id: format!("eg:{}{}", self.provenance, if mode.fuzzy { ":fuzzy" } else { "" }),
        }
    }
}

/// Harness adapter: scores relation evidence by edge lookup. Text-only
/// evidence and graph misses abstain.
#[derive(Debug, Clone)]
pub struct EgScorer {
    graph: Arc<EntailmentGraph>,
    mode: LookupMode,
    id: String,
}

impl EgScorer {
    pub fn score_one(&self, item: &ScoringItem<'_>) -> Option<f64> {
        let evidence = item.premise.statement()?;
        let hyp = item.hypothesis.typed();
        let mut premise = evidence.typed();
        if evidence.is_reversed_of(item.hypothesis) {
            premise = premise.swapped();
        }
        self.graph.lookup(&premise, &hyp, self.mode)
    }
}

impl Scorer for EgScorer {
    fn id(&self) -> &str {
        &self.id
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            max_batch: 4096,
            symmetric: false,
        }
    }

    fn score_batch(&self, items: &[ScoringItem<'_>]) -> Result<Vec<Option<f64>>> {
        Ok(items.iter().map(|i| self.score_one(i)).collect())
    }
}
