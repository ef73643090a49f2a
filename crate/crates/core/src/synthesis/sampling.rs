use std::collections::BTreeMap;

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Bundle, Proposition};
use crate::config::{SynthesisConfig, DEFAULT_BUCKET_BOUNDARIES};
use crate::corpus::{CorpusStore, WindowId};
use crate::error::{Error, Result};

/// Frequency histogram over half-open buckets `[b[i-1], b[i])`; bucket 0
/// holds everything below the first boundary and the last one is open-ended.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyBuckets {
    pub boundaries: Vec<u64>,
    pub histogram: BTreeMap<usize, usize>,
}

impl Default for FrequencyBuckets {
    fn default() -> Self {
        FrequencyBuckets {
            boundaries: DEFAULT_BUCKET_BOUNDARIES.to_vec(),
            histogram: BTreeMap::new(),
        }
    }
}

impl FrequencyBuckets {
    pub fn new(boundaries: Vec<u64>) -> Result<Self> {
        if !boundaries.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument(
                "bucket boundaries must be strictly ascending".into(),
            ));
        }
        Ok(FrequencyBuckets {
            boundaries,
            histogram: BTreeMap::new(),
        })
    }

    pub fn from_frequencies(boundaries: Vec<u64>, freqs: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut b = Self::new(boundaries)?;
        for f in freqs {
            b.add(f);
        }
        Ok(b)
    }

    pub fn bucket_count(&self) -> usize {
        self.boundaries.len() + 1
    }

    pub fn bucket_of(&self, freq: usize) -> usize {
        self.boundaries.partition_point(|&b| b <= freq as u64)
    }

    pub fn add(&mut self, freq: usize) {
        *self.histogram.entry(self.bucket_of(freq)).or_default() += 1;
    }

    pub fn total(&self) -> usize {
        self.histogram.values().sum()
    }

    /// Bucket shares; all zero for an empty histogram.
    pub fn proportions(&self) -> Vec<f64> {
        let total = self.total();
        (0..self.bucket_count())
            .map(|b| match total {
                0 => 0.0,
                t => self.histogram.get(&b).copied().unwrap_or(0) as f64 / t as f64,
            })
            .collect()
    }

    /// L1 distance between the two normalized histograms.
    pub fn l1_distance(&self, other: &FrequencyBuckets) -> f64 {
        let a = self.proportions();
        let b = other.proportions();
        let n = a.len().max(b.len());
        (0..n)
            .map(|i| (a.get(i).unwrap_or(&0.0) - b.get(i).unwrap_or(&0.0)).abs())
            .sum()
    }
}

/// Splits `total` proportionally to `weights`, flooring and handing the rest
/// out by descending remainder (ties to the lower index). Sums to `total`
/// unless every weight is zero.
pub fn largest_remainder(weights: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = weights.iter().filter(|w| w.is_finite() && **w > 0.0).sum();
    if sum <= 0.0 {
        return vec![0; weights.len()];
    }
    let exact: Vec<f64> = weights
        .iter()
        .map(|&w| {
            if w.is_finite() && w > 0.0 {
                w / sum * total as f64
            } else {
                0.0
            }
        })
        .collect();
    let mut out: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let assigned: usize = out.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).filter(|&i| exact[i] > 0.0).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle().take(total.saturating_sub(assigned)) {
        out[i] += 1;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleParams {
    pub target_positives: usize,
    pub boundaries: Vec<u64>,
    pub bucket_slack: f64,
    pub seed: u64,
}

impl Default for SampleParams {
    fn default() -> Self {
        SampleParams {
            target_positives: 21_773,
            boundaries: DEFAULT_BUCKET_BOUNDARIES.to_vec(),
            bucket_slack: 0.05,
            seed: 0,
        }
    }
}

impl From<&SynthesisConfig> for SampleParams {
    fn from(cfg: &SynthesisConfig) -> Self {
        SampleParams {
            target_positives: cfg.target_positives,
            boundaries: cfg.bucket_boundaries.clone(),
            bucket_slack: cfg.bucket_slack,
            seed: cfg.seed,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleDiagnostics {
    pub target_positives: usize,
    pub target_negatives: usize,
    pub positives: usize,
    pub negatives: usize,
    pub windows_short: usize,
    pub bucket_quota: Vec<usize>,
    pub bucket_used: Vec<usize>,
    pub rejected_by_bucket: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    /// Sorted by (window, bundle id).
    pub bundles: Vec<Bundle>,
    pub warnings: Vec<String>,
    pub diagnostics: SampleDiagnostics,
}

impl Dataset {
    pub fn from_bundles(mut bundles: Vec<Bundle>) -> Dataset {
        bundles.sort_by(|a, b| (a.window_id(), &a.bundle_id).cmp(&(b.window_id(), &b.bundle_id)));
        let mut d = Dataset {
            bundles,
            ..Default::default()
        };
        d.diagnostics.positives = d.bundles.len();
        d.diagnostics.negatives = d.bundles.iter().map(|b| b.negatives.len()).sum();
        d
    }

    pub fn propositions(&self) -> impl Iterator<Item = &Proposition> {
        self.bundles.iter().flat_map(Bundle::propositions)
    }

    pub fn positives(&self) -> impl Iterator<Item = &Proposition> {
        self.bundles.iter().map(|b| &b.positive)
    }

    pub fn negatives(&self) -> impl Iterator<Item = &Proposition> {
        self.bundles.iter().flat_map(|b| b.negatives.iter())
    }

    pub fn positive_count(&self) -> usize {
        self.bundles.len()
    }

    pub fn negative_count(&self) -> usize {
        self.bundles.iter().map(|b| b.negatives.len()).sum()
    }

    pub fn len(&self) -> usize {
        self.positive_count() + self.negative_count()
    }

    pub fn is_empty(&self) -> bool {
        self.bundles.is_empty()
    }
}

/// Draws whole bundles. Each window's positive quota is proportional to its
/// article count; negatives are admitted against per-bucket quotas that
/// follow the bucket shares of `positive_population`, with `bucket_slack`
/// relative overshoot. Windows take turns so no window drains a bucket
/// first. Shortfalls are reported as warnings.
pub fn sample_dataset(
    store: &CorpusStore,
    bundles: &[Bundle],
    positive_population: &[Proposition],
    params: &SampleParams,
) -> Result<Dataset> {
    let reference = FrequencyBuckets::from_frequencies(
        params.boundaries.clone(),
        positive_population.iter().map(|p| p.predicate_frequency),
    )?;
    if !(params.bucket_slack >= 0.0 && params.bucket_slack.is_finite()) {
        return Err(Error::InvalidArgument(
            "bucket_slack must be a non-negative number".into(),
        ));
    }
    let mut out = Dataset::default();
    out.diagnostics.target_positives = params.target_positives;
    if params.target_positives == 0 {
        return Ok(out);
    }
    if bundles.is_empty() {
        out.warnings.push("no bundles to sample from".into());
        return Ok(out);
    }

    let windows = store.windows();
    let weights: Vec<f64> = windows.iter().map(|w| w.article_ids.len() as f64).collect();
    let window_quota = largest_remainder(&weights, params.target_positives);
    let slot: BTreeMap<WindowId, usize> = windows.iter().enumerate().map(|(i, w)| (w.id, i)).collect();

    let mut per_window: Vec<Vec<&Bundle>> = vec![Vec::new(); windows.len()];
    for b in bundles {
        let i = *slot.get(&b.window_id()).ok_or(Error::UnknownWindow(b.window_id().0))?;
        per_window[i].push(b);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    for list in &mut per_window {
        list.sort_by(|a, b| a.bundle_id.cmp(&b.bundle_id));
        list.shuffle(&mut rng);
    }

    let ratio = bundles.iter().map(|b| b.negatives.len()).sum::<usize>() as f64 / bundles.len() as f64;
    let target_negatives = (params.target_positives as f64 * ratio).round() as usize;
    let quota = largest_remainder(&reference.proportions(), target_negatives);
    let caps: Vec<usize> = quota
        .iter()
        .map(|&q| ((q as f64) * (1.0 + params.bucket_slack)).floor() as usize)
        .collect();
    let mut used = vec![0usize; quota.len()];
    let mut taken = vec![0usize; windows.len()];
    let mut cursor = vec![0usize; windows.len()];
    let mut chosen: Vec<Bundle> = Vec::new();
    let mut rejected = 0usize;

    loop {
        let mut progress = false;
        for w in 0..windows.len() {
            if taken[w] >= window_quota[w] {
                continue;
            }
            while cursor[w] < per_window[w].len() {
                let b = per_window[w][cursor[w]];
                cursor[w] += 1;
                let mut need = vec![0usize; quota.len()];
                for n in &b.negatives {
                    need[reference.bucket_of(n.predicate_frequency)] += 1;
                }
                if need.iter().enumerate().all(|(i, &k)| used[i] + k <= caps[i]) {
                    for (u, k) in used.iter_mut().zip(&need) {
                        *u += k;
                    }
                    taken[w] += 1;
                    chosen.push(b.clone());
                    progress = true;
                    break;
                }
                rejected += 1;
            }
        }
        if !progress {
            break;
        }
    }

    let mut d = Dataset::from_bundles(chosen);
    let short: Vec<usize> = (0..windows.len()).filter(|&w| taken[w] < window_quota[w]).collect();
    if !short.is_empty() {
        let missing: usize = short.iter().map(|&w| window_quota[w] - taken[w]).sum();
        d.warnings.push(format!(
            "{} of {} windows could not fill their quota; {} positives short of the target {}",
            short.len(),
            windows.len(),
            missing,
            params.target_positives
        ));
    }
    let under: Vec<String> = (0..quota.len())
        .filter(|&i| used[i] < quota[i])
        .map(|i| format!("bucket {i}: {}/{}", used[i], quota[i]))
        .collect();
    if !under.is_empty() {
        d.warnings
            .push(format!("negative bucket quotas not met ({})", under.join(", ")));
    }
    for w in &d.warnings {
        log::warn!("{w}");
    }
    d.diagnostics = SampleDiagnostics {
        target_positives: params.target_positives,
        target_negatives,
        positives: d.positive_count(),
        negatives: d.negative_count(),
        windows_short: short.len(),
        bucket_quota: quota,
        bucket_used: used,
        rejected_by_bucket: rejected,
    };
    Ok(d)
}

/// Windows ending before `boundary` go to dev, the rest to test. Bundles
/// share one window, so none straddles the split.
pub fn split_by_time(store: &CorpusStore, dataset: &Dataset, boundary: NaiveDate) -> Result<(Dataset, Dataset)> {
    let mut dev = Vec::new();
    let mut test = Vec::new();
    for b in &dataset.bundles {
        if store.window(b.window_id())?.end_date < boundary {
            dev.push(b.clone());
        } else {
            test.push(b.clone());
        }
    }
    Ok((Dataset::from_bundles(dev), Dataset::from_bundles(test)))
}
