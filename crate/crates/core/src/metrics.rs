//! Precision-recall geometry and normalized AUC.
//!
//! Curves are swept over distinct scores in descending order; each tie group
//! enters atomically, so a constant scorer yields a single point at
//! (recall 1, precision xi). Areas use linear interpolation between points.
//! Under the default inclusive left boundary the first point's precision is
//! extended back to recall 0.

use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub score: f64,
    pub label: bool,
}

/// Scored entries. `f64::NEG_INFINITY` marks entries without a score.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RankedPredictions {
    entries: Vec<Prediction>,
}

impl RankedPredictions {
    pub fn new(entries: Vec<Prediction>) -> Result<Self> {
        if let Some(p) = entries.iter().find(|p| p.score.is_nan() || p.score == f64::INFINITY) {
            return Err(Error::Metric(format!("score {} is not usable", p.score)));
        }
        Ok(RankedPredictions { entries })
    }

    pub fn from_pairs(pairs: &[(f64, bool)]) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .map(|&(score, label)| Prediction { score, label })
                .collect(),
        )
    }

    pub fn entries(&self) -> &[Prediction] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.entries.iter().filter(|p| p.label).count()
    }

    /// Recall reached once every scored entry is admitted.
    pub fn recall_ceiling(&self) -> f64 {
        let pos = self.positives();
        if pos == 0 {
            return 0.0;
        }
        let scored = self.entries.iter().filter(|p| p.label && p.score.is_finite()).count();
        scored as f64 / pos as f64
    }
}

/// Entries lacking a score are ranked strictly last, as one tie group.
pub fn zero_evidence_rank(entries: &[(Option<f64>, bool)]) -> Result<RankedPredictions> {
    RankedPredictions::new(
        entries
            .iter()
            .map(|&(score, label)| Prediction {
                score: score.unwrap_or(f64::NEG_INFINITY),
                label,
            })
            .collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub recall: f64,
    pub precision: f64,
    /// Cumulative true positives at this point.
    #[serde(skip)]
    pub tp: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    pub points: Vec<PrPoint>,
    pub positives: usize,
    pub total: usize,
}

impl PrCurve {
    /// Random-baseline precision: the positive ratio.
    pub fn xi(&self) -> f64 {
        self.positives as f64 / self.total as f64
    }

    pub fn max_recall(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.recall)
    }
}

pub fn pr_curve(predictions: &RankedPredictions) -> Result<PrCurve> {
    if predictions.is_empty() {
        return Err(Error::Metric("no predictions".into()));
    }
    let positives = predictions.positives();
    if positives == 0 {
        return Err(Error::Metric("no positive entries; xi is undefined".into()));
    }
    let mut sorted: Vec<Prediction> = predictions.entries.clone();
    sorted.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap_or(Ordering::Equal));

    let mut points = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < sorted.len() {
        let score = sorted[i].score;
        while i < sorted.len() && sorted[i].score == score {
            if sorted[i].label {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(PrPoint {
            recall: tp as f64 / positives as f64,
            precision: tp as f64 / (tp + fp) as f64,
            tp,
        });
    }
    Ok(PrCurve {
        points,
        positives,
        total: sorted.len(),
    })
}

/// Where area integration starts along the recall axis.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryConvention {
    /// The first point's precision is held back to recall 0.
    #[default]
    Inclusive,
    /// Integration starts at the first point's recall.
    FirstPoint,
}

/// Linear segments as (tp delta, precision at start, precision at end).
fn segments(curve: &PrCurve, convention: BoundaryConvention) -> Vec<(f64, f64, f64)> {
    let mut segs = Vec::with_capacity(curve.points.len());
    let Some(first) = curve.points.first() else {
        return segs;
    };
    if convention == BoundaryConvention::Inclusive {
        segs.push((first.tp as f64, first.precision, first.precision));
    }
    for w in curve.points.windows(2) {
        segs.push(((w[1].tp - w[0].tp) as f64, w[0].precision, w[1].precision));
    }
    segs
}

/// Normalized area between the curve and a precision floor, counting only
/// the recall range where precision is at or above the floor. A perfect
/// curve scores 1 for any floor; a curve never above the floor scores 0.
pub fn auc_with_floor(curve: &PrCurve, floor: f64) -> Result<f64> {
    auc_with_floor_using(curve, floor, BoundaryConvention::default())
}

pub fn auc_with_floor_using(curve: &PrCurve, floor: f64, convention: BoundaryConvention) -> Result<f64> {
    if !(0.0..1.0).contains(&floor) {
        return Err(Error::Metric(format!("precision floor {floor} outside [0, 1)")));
    }
    let span = 1.0 - floor;
    let mut acc = 0.0;
    for (dtp, p1, p2) in segments(curve, convention) {
        if dtp == 0.0 {
            continue;
        }
        let (a, b) = (p1 - floor, p2 - floor);
        acc += if a >= 0.0 && b >= 0.0 {
            dtp * ((p1 + p2) / 2.0 - floor) / span
        } else if a <= 0.0 && b <= 0.0 {
            0.0
        } else {
            // one endpoint above the floor: the part above is a triangle
            let above = a.max(b);
            let frac = above / (a - b).abs();
            dtp * frac * above / 2.0 / span
        };
    }
    Ok(acc / curve.positives as f64)
}

/// `(AUC_xi - xi) / (1 - xi)`, where `AUC_xi - xi` is the signed area
/// between the curve and the random-baseline line. Negative when the curve
/// runs below random; values are not clamped.
pub fn auc_norm(curve: &PrCurve, xi: f64) -> Result<f64> {
    auc_norm_using(curve, xi, BoundaryConvention::default())
}

pub fn auc_norm_using(curve: &PrCurve, xi: f64, convention: BoundaryConvention) -> Result<f64> {
    if !(xi > 0.0 && xi < 1.0) {
        return Err(Error::Metric(format!("xi {xi} outside (0, 1)")));
    }
    let span = 1.0 - xi;
    let acc: f64 = segments(curve, convention)
        .into_iter()
        .map(|(dtp, p1, p2)| dtp * ((p1 + p2) / 2.0 - xi) / span)
        .sum();
    Ok(acc / curve.positives as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AucReport {
    pub xi: f64,
    /// Absolute area under the curve, `xi + (1 - xi) * auc_norm`.
    pub auc_xi: f64,
    pub auc_norm: f64,
    pub auc_50: f64,
    pub max_recall: f64,
    #[serde(with = "curve_pairs")]
    pub curve: Vec<PrPoint>,
}

impl AucReport {
    pub fn compute(predictions: &RankedPredictions) -> Result<AucReport> {
        Self::compute_using(predictions, BoundaryConvention::default())
    }

    pub fn compute_using(predictions: &RankedPredictions, convention: BoundaryConvention) -> Result<AucReport> {
        let curve = pr_curve(predictions)?;
        let xi = curve.xi();
        let auc_norm = auc_norm_using(&curve, xi, convention)?;
        Ok(AucReport {
            xi,
            auc_xi: xi + (1.0 - xi) * auc_norm,
            auc_norm,
            auc_50: auc_with_floor_using(&curve, 0.5, convention)?,
            max_recall: predictions.recall_ceiling(),
            curve: curve.points,
        })
    }

    /// `{"xi","auc_norm","auc_50","curve":[[r,p],...]}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "xi": self.xi,
            "auc_norm": self.auc_norm,
            "auc_50": self.auc_50,
            "curve": self.curve.iter().map(|p| [p.recall, p.precision]).collect::<Vec<_>>(),
        })
    }

    /// Plot data: one `recall,precision` row per curve point.
    pub fn curve_csv(&self) -> String {
        let mut out = String::from("recall,precision\n");
        for p in &self.curve {
            let _ = writeln!(out, "{},{}", p.recall, p.precision);
        }
        out
    }
}

mod curve_pairs {
    use super::PrPoint;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(points: &[PrPoint], s: S) -> Result<S::Ok, S::Error> {
        points
            .iter()
            .map(|p| [p.recall, p.precision])
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<PrPoint>, D::Error> {
        let pairs: Vec<[f64; 2]> = Vec::deserialize(d)?;
        Ok(pairs
            .into_iter()
            .map(|[recall, precision]| PrPoint {
                recall,
                precision,
                tp: 0,
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(pairs: &[(f64, bool)]) -> PrCurve {
        pr_curve(&RankedPredictions::from_pairs(pairs).unwrap()).unwrap()
    }

    fn rp(c: &PrCurve) -> Vec<(f64, f64)> {
        c.points.iter().map(|p| (p.recall, p.precision)).collect()
    }

    #[test]
    fn hand_sweep() {
        let c = curve(&[(0.9, true), (0.8, false), (0.7, true), (0.6, false)]);
        assert_eq!(rp(&c), vec![(0.5, 1.0), (0.5, 0.5), (1.0, 2.0 / 3.0), (1.0, 0.5)]);
        // 0.5 * 1 + 0.5 * (0.5 + 2/3) / 2 = 0.7916..; normalized by 0.5 above xi = 0.5
        let expected = (0.5 + 0.5 * (0.5 + 2.0 / 3.0) / 2.0 - 0.5) / 0.5;
        assert!((auc_norm(&c, 0.5).unwrap() - expected).abs() < 1e-12);
        assert!((auc_with_floor(&c, 0.5).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn endpoints_are_exact() {
        let perfect = curve(&[(0.9, true), (0.8, true), (0.7, true), (0.2, false), (0.1, false)]);
        assert_eq!(perfect.points[2].precision, 1.0);
        assert_eq!(perfect.points[2].recall, 1.0);
        assert_eq!(auc_norm(&perfect, perfect.xi()).unwrap(), 1.0);
        assert_eq!(auc_with_floor(&perfect, 0.5).unwrap(), 1.0);

        let flat = curve(&[(0.3, true), (0.3, false), (0.3, false)]);
        assert_eq!(rp(&flat), vec![(1.0, 1.0 / 3.0)]);
        assert_eq!(auc_norm(&flat, flat.xi()).unwrap(), 0.0);
        assert_eq!(auc_with_floor(&flat, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn below_random_goes_negative() {
        let c = curve(&[(0.9, false), (0.8, false), (0.7, true), (0.6, true)]);
        assert!(auc_norm(&c, c.xi()).unwrap() < 0.0);
        assert_eq!(auc_with_floor(&c, c.xi()).unwrap(), 0.0);
    }

    #[test]
    fn first_point_convention_is_lower() {
        let c = curve(&[(0.9, true), (0.8, false), (0.7, true), (0.6, false)]);
        let inclusive = auc_norm_using(&c, 0.5, BoundaryConvention::Inclusive).unwrap();
        let first = auc_norm_using(&c, 0.5, BoundaryConvention::FirstPoint).unwrap();
        assert!(first < inclusive);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(pr_curve(&RankedPredictions::default()).is_err());
        assert!(pr_curve(&RankedPredictions::from_pairs(&[(0.1, false)]).unwrap()).is_err());
        assert!(RankedPredictions::from_pairs(&[(f64::NAN, true)]).is_err());
        let c = curve(&[(0.1, true), (0.2, false)]);
        assert!(auc_norm(&c, 0.0).is_err());
        assert!(auc_norm(&c, 1.0).is_err());
        assert!(auc_with_floor(&c, 1.0).is_err());
    }

    #[test]
    fn missing_scores_form_last_group() {
        let ranked = zero_evidence_rank(&[(Some(0.9), true), (Some(0.4), false), (None, true)]).unwrap();
        let c = pr_curve(&ranked).unwrap();
        assert_eq!(rp(&c), vec![(0.5, 1.0), (0.5, 0.5), (1.0, 2.0 / 3.0)]);
        assert_eq!(ranked.recall_ceiling(), 0.5);

        let all_missing = zero_evidence_rank(&[(None, true), (None, false)]).unwrap();
        let c = pr_curve(&all_missing).unwrap();
        assert_eq!(rp(&c), vec![(1.0, 0.5)]);
        assert_eq!(auc_norm(&c, c.xi()).unwrap(), 0.0);
    }

    #[test]
    fn report_json_shape() {
        let ranked = RankedPredictions::from_pairs(&[(0.9, true), (0.1, false)]).unwrap();
        let report = AucReport::compute(&ranked).unwrap();
        let v = report.to_json();
        assert_eq!(v["auc_norm"], 1.0);
        assert_eq!(v["curve"][0], serde_json::json!([1.0, 1.0]));
        assert!((report.auc_norm - (report.auc_xi - report.xi) / (1.0 - report.xi)).abs() < 1e-12);
        assert!(report.curve_csv().starts_with("recall,precision\n1,1\n"));
    }
}
