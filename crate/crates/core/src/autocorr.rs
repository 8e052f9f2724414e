//! Autocorrelation-coefficient representation used for shape anomalies.
//!
//! Each variable row of a window is replaced by its autocorrelation at lags
//! `1..q-1`. The representation is affine invariant and largely insensitive
//! to time shifts of periodic content.

use crate::error::{Error, Result};
use crate::series::{Block, FeatureSpace, SubsequenceSet};

/// Rows whose sum of squared deviations falls below this are degenerate.
const ZERO_VARIANCE_EPS: f64 = 1e-12;

/// Autocorrelation coefficients of one row at lags `1..row.len()-1`.
/// Returns `None` when the row has no variance.
pub fn row_autocorr(row: &[f64]) -> Option<Vec<f64>> {
    let q = row.len();
    let mean = row.iter().sum::<f64>() / q as f64;
    let dev: Vec<f64> = row.iter().map(|x| x - mean).collect();
    let denom: f64 = dev.iter().map(|d| d * d).sum();
    let scale = row.iter().map(|x| x * x).sum::<f64>().max(1.0);
    if denom <= ZERO_VARIANCE_EPS * scale {
        return None;
    }
    Some(
        (1..q)
            .map(|lag| {
                let num: f64 = (lag..q).map(|t| dev[t] * dev[t - lag]).sum();
                num / denom
            })
            .collect(),
    )
}

/// Transforms an `n x q` window into its `n x (q-1)` coefficient matrix.
pub fn autocorr(window: &Block, start_index: usize) -> Result<Block> {
    if window.width() < 2 {
        return Err(Error::InvalidSpec(format!(
            "autocorrelation needs windows of length >= 2, got {}",
            window.width()
        )));
    }
    let mut data = Vec::with_capacity(window.vars() * (window.width() - 1));
    for (variable, row) in window.rows().enumerate() {
        let coeffs = row_autocorr(row).ok_or(Error::DegenerateWindow {
            variable,
            start_index,
        })?;
        data.extend(coeffs);
    }
    Block::new(window.vars(), window.width() - 1, data)
}

/// Maps every window of a raw set into autocorrelation space, keeping start
/// indices. The first degenerate window aborts the transform.
pub fn transform_set(set: &SubsequenceSet) -> Result<SubsequenceSet> {
    let blocks = set
        .iter()
        .map(|(start, block)| autocorr(block, start))
        .collect::<Result<Vec<_>>>()?;
    SubsequenceSet::from_blocks(
        set.spec(),
        FeatureSpace::Autocorrelation,
        set.starts().to_vec(),
        blocks,
    )
}
