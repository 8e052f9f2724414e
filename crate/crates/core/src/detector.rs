//! End-to-end detection pipeline, score aggregation, the confidence index
//! and grid tuning of cluster count and window length.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::autocorr::transform_set;
use crate::error::{Error, Result};
use crate::fcm::{fit_fcm, FcmParams, FuzzyModel, WeightVector};
use crate::pso::{optimize_weights, PsoConfig, PsoResult};
use crate::reconstruction::reconstruct_model;
use crate::series::{slide_windows, zscore_normalize, MultiSeries, WindowSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Raw values; catches abnormal magnitudes.
    Amplitude,
    /// Autocorrelation coefficients; catches abnormal waveforms.
    Shape,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "amplitude" => Ok(Mode::Amplitude),
            "shape" => Ok(Mode::Shape),
            other => Err(Error::InvalidConfig(format!("unknown mode {other:?}"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Amplitude => "amplitude",
            Mode::Shape => "shape",
        })
    }
}

/// How the variable weights of the clustering are chosen.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightStrategy {
    /// Search the weights by PSO on the reconstruction error.
    Optimize(PsoConfig),
    /// Use these weights as given.
    Fixed(WeightVector),
    /// Equal weights, i.e. the standard FCM.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DetectorConfig {
    pub mode: Mode,
    pub clusters: usize,
    pub fuzzifier: f64,
    pub window: WindowSpec,
    pub weights: WeightStrategy,
    pub fcm: FcmParams,
}

impl DetectorConfig {
    /// Fuzzifier 2, default FCM settings and desk-scale PSO.
    pub fn new(mode: Mode, clusters: usize, window: WindowSpec) -> Self {
        Self {
            mode,
            clusters,
            fuzzifier: 2.0,
            window,
            weights: WeightStrategy::Optimize(PsoConfig::default()),
            fcm: FcmParams::default(),
        }
    }

    pub fn with_weights(mut self, weights: WeightStrategy) -> Self {
        self.weights = weights;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.fcm.seed = seed;
        if let WeightStrategy::Optimize(pso) = &mut self.weights {
            pso.seed = seed;
        }
        self
    }

    pub fn validate(&self, series: &MultiSeries) -> Result<()> {
        self.window.validate(series.len())?;
        if self.mode == Mode::Shape && self.window.length < 3 {
            return Err(Error::InvalidSpec(format!(
                "shape mode needs windows of length >= 3, got {}",
                self.window.length
            )));
        }
        let count = self.window.count(series.len());
        if self.clusters < 2 || self.clusters > count {
            return Err(Error::InvalidConfig(format!(
                "cluster count {} must lie in [2, {count}] (number of windows)",
                self.clusters
            )));
        }
        if let WeightStrategy::Fixed(w) = &self.weights {
            if w.len() != series.num_vars() {
                return Err(Error::InvalidConfig(format!(
                    "{} fixed weights for {} variables",
                    w.len(),
                    series.num_vars()
                )));
            }
        }
        if let WeightStrategy::Optimize(pso) = &self.weights {
            pso.validate()?;
        }
        Ok(())
    }
}

/// Stride of one tenth of the window, at least 1.
pub fn default_stride(window_length: usize) -> usize {
    ((window_length as f64 * 0.1).round() as usize).max(1)
}

#[derive(Debug, Clone)]
pub struct AnomalyScores {
    pub window: WindowSpec,
    pub starts: Vec<usize>,
    pub per_subsequence: Vec<f64>,
    /// Maximum score over all windows covering each timestamp.
    pub per_point: Vec<f64>,
    pub weights_used: WeightVector,
    pub model: FuzzyModel,
    pub pso: Option<PsoResult>,
}

/// Per-timestamp maximum over the covering windows; 0 where uncovered.
pub fn aggregate_max(
    series_len: usize,
    starts: &[usize],
    window_length: usize,
    scores: &[f64],
) -> Vec<f64> {
    let mut out = vec![0.0; series_len];
    for (&start, &s) in starts.iter().zip(scores) {
        for slot in &mut out[start..(start + window_length).min(series_len)] {
            if s > *slot {
                *slot = s;
            }
        }
    }
    out
}

/// Runs normalization, windowing, the optional autocorrelation transform,
/// weight selection, clustering and reconstruction scoring.
pub fn detect(series: &MultiSeries, config: &DetectorConfig) -> Result<AnomalyScores> {
    config.validate(series)?;
    let normalized = zscore_normalize(series);
    let raw = slide_windows(&normalized, config.window).map_err(|e| e.at_stage("windowing"))?;
    let set = match config.mode {
        Mode::Amplitude => raw,
        Mode::Shape => transform_set(&raw).map_err(|e| e.at_stage("autocorrelation"))?,
    };
    let m = config.fuzzifier;
    let (weights, pso) = match &config.weights {
        WeightStrategy::Optimize(pso) => {
            let res = optimize_weights(&set, config.clusters, m, &config.fcm, pso)
                .map_err(|e| e.at_stage("weight search"))?;
            (res.best_weights.clone(), Some(res))
        }
        WeightStrategy::Fixed(w) => (w.clone(), None),
        WeightStrategy::Uniform => (WeightVector::uniform(series.num_vars()), None),
    };
    let model = fit_fcm(&set, config.clusters, m, &weights, &config.fcm)
        .map_err(|e| e.at_stage("clustering"))?;
    let rec = reconstruct_model(&model, set.blocks()).map_err(|e| e.at_stage("reconstruction"))?;
    let starts = set.starts().to_vec();
    let per_point = aggregate_max(
        series.len(),
        &starts,
        config.window.length,
        &rec.per_subsequence_error,
    );
    Ok(AnomalyScores {
        window: config.window,
        starts,
        per_subsequence: rec.per_subsequence_error,
        per_point,
        weights_used: weights,
        model,
        pso,
    })
}

/// Mean score of the anomalous windows over the mean score of all windows.
pub fn confidence_index(scores: &[f64], anomalous: &[usize]) -> Result<f64> {
    if anomalous.is_empty() {
        return Err(Error::UndefinedIndex("no anomalous windows given".into()));
    }
    if let Some(&j) = anomalous.iter().find(|&&j| j >= scores.len()) {
        return Err(Error::UndefinedIndex(format!(
            "window {j} out of range for {} scores",
            scores.len()
        )));
    }
    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
    if !(mean > 0.0) {
        return Err(Error::UndefinedIndex("all scores are zero".into()));
    }
    let anomaly = anomalous.iter().map(|&j| scores[j]).sum::<f64>() / anomalous.len() as f64;
    Ok(anomaly / mean)
}

/// Label-free stand-in for the confidence index: max score over mean score.
pub fn proxy_confidence_index(scores: &[f64]) -> Result<f64> {
    let mean = scores.iter().sum::<f64>() / scores.len().max(1) as f64;
    if !(mean > 0.0) {
        return Err(Error::UndefinedIndex("all scores are zero".into()));
    }
    Ok(scores.iter().copied().fold(f64::NEG_INFINITY, f64::max) / mean)
}

/// Indices of windows that contain at least one labeled timestamp.
pub fn windows_overlapping(starts: &[usize], window_length: usize, labels: &[bool]) -> Vec<usize> {
    starts
        .iter()
        .enumerate()
        .filter(|(_, &s)| labels.iter().skip(s).take(window_length).any(|&l| l))
        .map(|(j, _)| j)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct GridCell {
    pub clusters: usize,
    pub window: usize,
    pub confidence_index: f64,
}

#[derive(Debug, Clone)]
pub struct TuneResult {
    pub best_clusters: usize,
    pub best_window: usize,
    /// Every evaluated cell, ordered by clusters then window length.
    pub grid: Vec<GridCell>,
}

impl TuneResult {
    pub fn best(&self) -> &GridCell {
        self.grid
            .iter()
            .find(|c| c.clusters == self.best_clusters && c.window == self.best_window)
            .expect("best cell is part of the grid")
    }
}

/// Runs [`detect`] for every `(clusters, window)` pair and keeps the pair with
/// the highest confidence index against the labeled timestamps. Ties go to
/// fewer clusters, then shorter windows. Each cell uses the stride of `base`.
pub fn tune_parameters(
    series: &MultiSeries,
    base: &DetectorConfig,
    clusters: &[usize],
    windows: &[usize],
    labels: &[bool],
) -> Result<TuneResult> {
    if clusters.is_empty() || windows.is_empty() {
        return Err(Error::InvalidConfig(
            "tuning ranges must be nonempty".into(),
        ));
    }
    if labels.len() != series.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for a series of length {}",
            labels.len(),
            series.len()
        )));
    }
    let mut cells: Vec<(usize, usize)> = clusters
        .iter()
        .flat_map(|&c| windows.iter().map(move |&q| (c, q)))
        .collect();
    cells.sort_unstable();
    cells.dedup();
    let grid = cells
        .par_iter()
        .map(|&(c, q)| {
            let config = DetectorConfig {
                clusters: c,
                window: WindowSpec::new(q, base.window.stride),
                ..base.clone()
            };
            let scores = detect(series, &config)?;
            let anomalous = windows_overlapping(&scores.starts, q, labels);
            let f = confidence_index(&scores.per_subsequence, &anomalous)?;
            Ok(GridCell {
                clusters: c,
                window: q,
                confidence_index: f,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best = &grid[0];
    for cell in &grid[1..] {
        if cell.confidence_index > best.confidence_index {
            best = cell;
        }
    }
    Ok(TuneResult {
        best_clusters: best.clusters,
        best_window: best.window,
        grid,
    })
}
