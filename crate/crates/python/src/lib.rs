//! Python bindings for the booqa core: metrics, lexicon, corpus store,
//! synthesis and sampling, entailment graphs, evaluation and the mesh.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::sync::Arc;

use booqa::config::{EvalConfig, RunConfig, SynthesisConfig};
use booqa::corpus::{read_articles, read_triples, CorpusStore, IngestOptions};
use booqa::graph::{EntailmentGraph, LookupMode, TypedPredicate};
use booqa::harness::{run_eval, ConstantScorer, Scorer};
use booqa::lexicon::Lexicon;
use booqa::mesh::{classify_subgroups, fix_split_leakage, link_converses, read_levyholt, ColumnOrder, Split};
use booqa::metrics::{pr_curve, zero_evidence_rank, AucReport};
use booqa::synthesis::{
    build_population, read_dataset_jsonl, sample_dataset, split_by_time, write_dataset_jsonl, Population, SampleParams,
};
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: booqa::Error) -> PyErr {
    use booqa::Error as E;
    match e {
        E::Io { .. } | E::Stream(_) => PyIOError::new_err(e.to_string()),
        E::Bridge(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn io_err(path: &PathBuf, e: std::io::Error) -> PyErr {
    err(booqa::Error::io(path, e))
}

fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn ranked(scores: Vec<Option<f64>>, labels: Vec<bool>) -> PyResult<booqa::metrics::RankedPredictions> {
    if scores.len() != labels.len() {
        return Err(PyValueError::new_err(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let entries: Vec<(Option<f64>, bool)> = scores.into_iter().zip(labels).collect();
    zero_evidence_rank(&entries).map_err(err)
}

/// Precision-recall summary; `None` scores rank below every scored entry.
#[pyclass(name = "AucReport", frozen)]
struct PyAucReport {
    inner: AucReport,
}

#[pymethods]
impl PyAucReport {
    #[getter]
    fn xi(&self) -> f64 {
        self.inner.xi
    }

    #[getter]
    fn auc_norm(&self) -> f64 {
        self.inner.auc_norm
    }

    #[getter]
    fn auc_50(&self) -> f64 {
        self.inner.auc_50
    }

    #[getter]
    fn max_recall(&self) -> f64 {
        self.inner.max_recall
    }

    /// `(recall, precision)` per threshold, highest score first.
    #[getter]
    fn curve(&self) -> Vec<(f64, f64)> {
        self.inner.curve.iter().map(|p| (p.recall, p.precision)).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "AucReport(auc_norm={:.4}, auc_50={:.4}, xi={:.4}, max_recall={:.4})",
            self.inner.auc_norm, self.inner.auc_50, self.inner.xi, self.inner.max_recall
        )
    }
}

#[pyfunction]
fn auc_report(scores: Vec<Option<f64>>, labels: Vec<bool>) -> PyResult<PyAucReport> {
    let inner = AucReport::compute(&ranked(scores, labels)?).map_err(err)?;
    Ok(PyAucReport { inner })
}

/// Signed normalized area above `floor` (the positive rate when omitted).
#[pyfunction]
#[pyo3(signature = (scores, labels, floor=None))]
fn auc_norm(scores: Vec<Option<f64>>, labels: Vec<bool>, floor: Option<f64>) -> PyResult<f64> {
    let curve = pr_curve(&ranked(scores, labels)?).map_err(err)?;
    let floor = floor.unwrap_or_else(|| curve.xi());
    booqa::metrics::auc_norm(&curve, floor).map_err(err)
}

/// Area above `floor` counting only the parts where precision is above it.
#[pyfunction]
fn auc_with_floor(scores: Vec<Option<f64>>, labels: Vec<bool>, floor: f64) -> PyResult<f64> {
    let curve = pr_curve(&ranked(scores, labels)?).map_err(err)?;
    booqa::metrics::auc_with_floor(&curve, floor).map_err(err)
}

#[pyclass(name = "Lexicon", frozen)]
struct PyLexicon {
    inner: Arc<Lexicon>,
}

#[pymethods]
impl PyLexicon {
    /// JSON lexicon file or a WordNet dict directory.
    #[new]
    #[pyo3(signature = (path, max_span=4))]
    fn new(path: PathBuf, max_span: usize) -> PyResult<Self> {
        let lex = Lexicon::load(&path).map_err(err)?.with_max_span(max_span);
        Ok(PyLexicon { inner: Arc::new(lex) })
    }

    #[staticmethod]
    #[pyo3(signature = (text, max_span=4))]
    fn from_json(text: &str, max_span: usize) -> PyResult<Self> {
        let lex = Lexicon::from_json_str(text).map_err(err)?.with_max_span(max_span);
        Ok(PyLexicon { inner: Arc::new(lex) })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn synonyms(&self, lemma: &str) -> BTreeSet<String> {
        self.inner.synonyms(lemma)
    }

    fn synsets_for(&self, lemma: &str) -> Vec<String> {
        self.inner
            .synsets_for(lemma)
            .into_iter()
            .map(|s| s.id.clone())
            .collect()
    }

    #[pyo3(signature = (synset_id, transitive=false))]
    fn hyponyms(&self, synset_id: &str, transitive: bool) -> PyResult<Vec<String>> {
        self.inner.hyponyms(synset_id, transitive).map_err(err)
    }
}

#[pyclass(name = "CorpusStore", frozen)]
struct PyCorpusStore {
    inner: Arc<CorpusStore>,
}

#[pymethods]
impl PyCorpusStore {
    /// Builds a store from article and triple JSONL files; malformed
    /// records are skipped.
    #[staticmethod]
    #[pyo3(signature = (articles, triples, window_span_days=3))]
    fn ingest(articles: PathBuf, triples: PathBuf, window_span_days: u32) -> PyResult<Self> {
        let open = |p: &PathBuf| File::open(p).map(BufReader::new).map_err(|e| io_err(p, e));
        let (arts, _) = read_articles(open(&articles)?).map_err(err)?;
        let (trips, _) = read_triples(open(&triples)?).map_err(err)?;
        let options = IngestOptions {
            window_span_days,
            ..IngestOptions::default()
        };
        let (store, _) = CorpusStore::ingest(arts, trips, &options).map_err(err)?;
        Ok(PyCorpusStore { inner: Arc::new(store) })
    }

    #[staticmethod]
    fn load(dir: PathBuf) -> PyResult<Self> {
        Ok(PyCorpusStore {
            inner: Arc::new(CorpusStore::load(&dir).map_err(err)?),
        })
    }

    fn save(&self, dir: PathBuf) -> PyResult<()> {
        self.inner.save(&dir).map_err(err)
    }

    #[getter]
    fn num_articles(&self) -> usize {
        self.inner.articles().len()
    }

    #[getter]
    fn num_triples(&self) -> usize {
        self.inner.triples().len()
    }

    #[getter]
    fn num_windows(&self) -> usize {
        self.inner.windows().len()
    }

    /// Distinct unordered argument pairs seen with `predicate` corpus-wide.
    fn argpair_count(&self, predicate: &str) -> usize {
        self.inner.predicate_argpair_count(predicate)
    }
}

fn synthesis_config(config: Option<&str>) -> PyResult<SynthesisConfig> {
    match config {
        Some(text) => Ok(RunConfig::from_toml_str(text).map_err(err)?.synthesis),
        None => Ok(SynthesisConfig::default()),
    }
}

#[pyclass(name = "Population", frozen)]
struct PyPopulation {
    inner: Population,
    config: SynthesisConfig,
}

#[pymethods]
impl PyPopulation {
    #[getter]
    fn num_positives(&self) -> usize {
        self.inner.positives.len()
    }

    #[getter]
    fn num_negatives(&self) -> usize {
        self.inner.negatives.len()
    }

    #[getter]
    fn num_bundles(&self) -> usize {
        self.inner.bundles.len()
    }

    fn stats<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.stats)
    }

    /// Frequency-matched sample; arguments override the synthesis config.
    #[pyo3(signature = (store, target_positives=None, seed=None))]
    fn sample(&self, store: &PyCorpusStore, target_positives: Option<usize>, seed: Option<u64>) -> PyResult<PyDataset> {
        let mut params = SampleParams::from(&self.config);
        if let Some(t) = target_positives {
            params.target_positives = t;
        }
        if let Some(s) = seed {
            params.seed = s;
        }
        let d = sample_dataset(&store.inner, &self.inner.bundles, &self.inner.positives, &params).map_err(err)?;
        Ok(PyDataset { inner: Arc::new(d) })
    }

    /// The whole bundle population as a dataset, without sampling.
    fn to_dataset(&self) -> PyDataset {
        PyDataset {
            inner: Arc::new(booqa::synthesis::Dataset::from_bundles(self.inner.bundles.clone())),
        }
    }
}

/// Positive and negative populations for every window. `config` is TOML
/// text with an optional `[synthesis]` table.
#[pyfunction]
#[pyo3(signature = (store, lexicon, config=None))]
fn synthesize(store: &PyCorpusStore, lexicon: &PyLexicon, config: Option<&str>) -> PyResult<PyPopulation> {
    let cfg = synthesis_config(config)?;
    let lex = (*lexicon.inner).clone().with_max_span(cfg.max_span);
    let inner = build_population(&store.inner, &lex, &cfg).map_err(err)?;
    Ok(PyPopulation { inner, config: cfg })
}

#[pyclass(name = "Dataset", frozen)]
struct PyDataset {
    inner: Arc<booqa::synthesis::Dataset>,
}

#[pymethods]
impl PyDataset {
    #[staticmethod]
    fn read_jsonl(path: PathBuf) -> PyResult<Self> {
        let f = File::open(&path).map_err(|e| io_err(&path, e))?;
        let d = read_dataset_jsonl(BufReader::new(f)).map_err(err)?;
        Ok(PyDataset { inner: Arc::new(d) })
    }

    fn write_jsonl(&self, path: PathBuf) -> PyResult<()> {
        let f = File::create(&path).map_err(|e| io_err(&path, e))?;
        let mut w = BufWriter::new(f);
        write_dataset_jsonl(&self.inner, &mut w).map_err(err)?;
        w.flush().map_err(|e| io_err(&path, e))
    }

    fn __len__(&self) -> usize {
        self.inner.propositions().count()
    }

    #[getter]
    fn num_positives(&self) -> usize {
        self.inner.positive_count()
    }

    #[getter]
    fn num_negatives(&self) -> usize {
        self.inner.negative_count()
    }

    /// Every proposition as a dict, positives before their negatives.
    fn records<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let props: Vec<_> = self.inner.propositions().collect();
        to_py(py, &props)
    }

    /// `(dev, test)`: windows starting before `boundary` (YYYY-MM-DD) go to dev.
    fn split_by_time(&self, store: &PyCorpusStore, boundary: &str) -> PyResult<(PyDataset, PyDataset)> {
        let date = booqa::corpus::parse_date(boundary)
            .ok_or_else(|| PyValueError::new_err(format!("bad date `{boundary}`")))?;
        let (dev, test) = split_by_time(&store.inner, &self.inner, date).map_err(err)?;
        Ok((PyDataset { inner: Arc::new(dev) }, PyDataset { inner: Arc::new(test) }))
    }
}

fn typed(role_form: &str, types: (String, String)) -> PyResult<TypedPredicate> {
    TypedPredicate::parse_with_types(role_form, types).map_err(err)
}

#[pyclass(name = "EntailmentGraph", frozen)]
struct PyEntailmentGraph {
    inner: Arc<EntailmentGraph>,
}

#[pymethods]
impl PyEntailmentGraph {
    #[new]
    fn new(dir: PathBuf) -> PyResult<Self> {
        Ok(PyEntailmentGraph {
            inner: Arc::new(EntailmentGraph::open(&dir).map_err(err)?),
        })
    }

    /// Edge score from `premise` to `hypothesis`, both role forms such as
    /// `(go.1,go.to.2)` typed by `types`; `None` when the graph abstains.
    #[pyo3(signature = (premise, hypothesis, types, fuzzy=false, cross_types=false))]
    fn lookup(
        &self,
        premise: &str,
        hypothesis: &str,
        types: (String, String),
        fuzzy: bool,
        cross_types: bool,
    ) -> PyResult<Option<f64>> {
        let p = typed(premise, types.clone())?;
        let h = typed(hypothesis, types)?;
        Ok(self.inner.lookup(&p, &h, LookupMode { fuzzy, cross_types }))
    }

    #[getter]
    fn provenance(&self) -> String {
        self.inner.provenance().to_string()
    }
}

/// Scores `dataset` against `store` with an entailment graph, or with a
/// constant when no graph is given. Returns the result as a dict.
#[pyfunction]
#[pyo3(signature = (store, dataset, graph=None, constant=0.5, fuzzy=false, retrieval="relation", evidence_cap=3200, jobs=0))]
#[allow(clippy::too_many_arguments)]
fn evaluate<'py>(
    py: Python<'py>,
    store: &PyCorpusStore,
    dataset: &PyDataset,
    graph: Option<&PyEntailmentGraph>,
    constant: f64,
    fuzzy: bool,
    retrieval: &str,
    evidence_cap: usize,
    jobs: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let config = EvalConfig {
        retrieval: retrieval.parse().map_err(err)?,
        evidence_cap,
        jobs,
        ..EvalConfig::default()
    };
    config.validate().map_err(err)?;
    let mode = if fuzzy {
        LookupMode::fuzzy()
    } else {
        LookupMode::exact()
    };
    let scorer: Box<dyn Scorer> = match graph {
        Some(g) => Box::new(g.inner.as_scorer(mode)),
        None => Box::new(ConstantScorer { value: constant }),
    };
    let result = run_eval(&store.inner, &dataset.inner, scorer.as_ref(), &config).map_err(err)?;
    to_py(py, &result)
}

/// Sub-group sizes per split for LevyHolt-style TSV files, given as a
/// mapping from split name to path.
#[pyfunction]
#[pyo3(signature = (files, hypothesis_first=false, seed=0))]
fn mesh_counts<'py>(
    py: Python<'py>,
    files: &Bound<'py, PyDict>,
    hypothesis_first: bool,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let order = if hypothesis_first {
        ColumnOrder::HypothesisFirst
    } else {
        ColumnOrder::PremiseFirst
    };
    let mut pairs = Vec::new();
    for (split, path) in files.iter() {
        let split: Split = split.extract::<String>()?.parse().map_err(err)?;
        let path: PathBuf = path.extract()?;
        let f = File::open(&path).map_err(|e| io_err(&path, e))?;
        pairs.extend(read_levyholt(BufReader::new(f), split, order).map_err(err)?);
    }
    link_converses(&mut pairs);
    fix_split_leakage(&mut pairs, seed);
    let classes = classify_subgroups(&pairs);
    let out = PyDict::new(py);
    for ((split, group), n) in classes.counts(&pairs) {
        let key = split.to_string();
        let inner = match out.get_item(&key)? {
            Some(d) => d.cast_into::<PyDict>()?,
            None => {
                let d = PyDict::new(py);
                out.set_item(&key, &d)?;
                d
            }
        };
        inner.set_item(group.to_string(), n)?;
    }
    Ok(out)
}

#[pymodule]
fn booqa_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyAucReport>()?;
    m.add_class::<PyLexicon>()?;
    m.add_class::<PyCorpusStore>()?;
    m.add_class::<PyPopulation>()?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyEntailmentGraph>()?;
    m.add_function(wrap_pyfunction!(auc_report, m)?)?;
    m.add_function(wrap_pyfunction!(auc_norm, m)?)?;
    m.add_function(wrap_pyfunction!(auc_with_floor, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(mesh_counts, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
