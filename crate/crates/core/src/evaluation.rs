//! Thresholding, confusion-matrix metrics and baseline detectors.

use std::fmt;

use rayon::prelude::*;

use crate::detector::{detect, AnomalyScores, DetectorConfig, WeightStrategy};
use crate::error::{Error, Result};
use crate::series::{MultiSeries, SubsequenceSet};

/// `score > threshold` is abnormal.
pub fn binarize(scores: &[f64], threshold: f64) -> Vec<bool> {
    scores.iter().map(|&s| s > threshold).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn from_labels(pred: &[bool], truth: &[bool]) -> Result<Self> {
        if pred.len() != truth.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} predictions for {} labels",
                pred.len(),
                truth.len()
            )));
        }
        let mut c = Self::default();
        for (&p, &t) in pred.iter().zip(truth) {
            match (p, t) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Metrics derived from confusion counts. `None` marks a metric whose
/// denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub counts: ConfusionCounts,
    pub threshold: Option<f64>,
    pub accuracy: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f_measure: Option<f64>,
}

impl MetricReport {
    pub fn from_counts(counts: ConfusionCounts) -> Self {
        let ConfusionCounts { tp, fp, tn, fn_ } = counts;
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f_measure = match (precision, recall) {
            (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
            _ => None,
        };
        Self {
            counts,
            threshold: None,
            accuracy: ratio(tn + tp, tn + fp + fn_ + tp),
            sensitivity: recall,
            specificity: ratio(tn, tn + fp),
            precision,
            recall,
            f_measure,
        }
    }

    fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = Some(threshold);
        self
    }
}

impl fmt::Display for MetricReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show =
            |v: Option<f64>| v.map_or_else(|| "undefined".to_string(), |x| format!("{x:.6}"));
        let c = self.counts;
        if let Some(t) = self.threshold {
            writeln!(f, "threshold    {t}")?;
        }
        writeln!(f, "TP {}  FP {}  TN {}  FN {}", c.tp, c.fp, c.tn, c.fn_)?;
        writeln!(f, "accuracy     {}", show(self.accuracy))?;
        writeln!(f, "sensitivity  {}", show(self.sensitivity))?;
        writeln!(f, "specificity  {}", show(self.specificity))?;
        writeln!(f, "precision    {}", show(self.precision))?;
        write!(f, "f-measure    {}", show(self.f_measure))
    }
}

pub fn metrics(pred: &[bool], truth: &[bool]) -> Result<MetricReport> {
    Ok(MetricReport::from_counts(ConfusionCounts::from_labels(
        pred, truth,
    )?))
}

/// Candidate thresholds: `-inf`, the midpoints of consecutive distinct
/// scores, and `+inf`, in ascending order.
pub fn candidate_thresholds(scores: &[f64]) -> Vec<f64> {
    let mut sorted: Vec<f64> = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let mut out = Vec::with_capacity(sorted.len() + 1);
    out.push(f64::NEG_INFINITY);
    out.extend(sorted.windows(2).map(|w| w[0] + (w[1] - w[0]) / 2.0));
    out.push(f64::INFINITY);
    out
}

/// The accuracy-maximizing threshold; ties go to the smallest threshold.
pub fn best_threshold(scores: &[f64], truth: &[bool]) -> Result<(f64, MetricReport)> {
    if scores.len() != truth.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} scores for {} labels",
            scores.len(),
            truth.len()
        )));
    }
    if scores.is_empty() {
        return Err(Error::InvalidConfig("no scores to threshold".into()));
    }
    let mut best: Option<(f64, MetricReport)> = None;
    for t in candidate_thresholds(scores) {
        let report = metrics(&binarize(scores, t), truth)?.with_threshold(t);
        let better = match &best {
            None => true,
            Some((_, b)) => report.accuracy > b.accuracy,
        };
        if better {
            best = Some((t, report));
        }
    }
    Ok(best.expect("candidate list is never empty"))
}

/// 1-NN discord score: squared distance from each window to its nearest
/// window whose start is at least `exclusion` timestamps away.
pub fn knn_discord_scores(set: &SubsequenceSet, exclusion: usize) -> Result<Vec<f64>> {
    if set.len() < 2 {
        return Err(Error::InvalidConfig(
            "1-NN scoring needs at least two windows".into(),
        ));
    }
    let starts = set.starts();
    let blocks = set.blocks();
    (0..set.len())
        .into_par_iter()
        .map(|j| {
            let mut best = f64::INFINITY;
            for k in 0..set.len() {
                if starts[j].abs_diff(starts[k]) < exclusion || k == j {
                    continue;
                }
                let d = blocks[j].sq_distance(&blocks[k])?;
                if d < best {
                    best = d;
                }
            }
            if best.is_infinite() {
                Err(Error::NoNeighbor {
                    index: j,
                    exclusion,
                })
            } else {
                Ok(best)
            }
        })
        .collect()
}

/// The pipeline with equal variable weights and no weight search.
pub fn detect_standard_fcm(series: &MultiSeries, config: &DetectorConfig) -> Result<AnomalyScores> {
    let standard = config.clone().with_weights(WeightStrategy::Uniform);
    detect(series, &standard)
}
