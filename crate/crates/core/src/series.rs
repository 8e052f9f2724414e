//! Multivariate series container, z-score normalization and sliding-window
//! segmentation.

use crate::error::{Error, Result};

/// Below this standard deviation a variable is treated as constant.
pub const CONSTANT_STD_EPS: f64 = 1e-12;

/// An `n`-variable real-valued series of length `p`, stored row-major
/// (one row per timestamp).
#[derive(Debug, Clone, PartialEq)]
pub struct MultiSeries {
    names: Vec<String>,
    values: Vec<f64>,
    len: usize,
}

impl MultiSeries {
    /// Builds a series from timestamp rows.
    pub fn from_rows(names: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let n = names.len();
        if n == 0 {
            return Err(Error::InvalidSeries(
                "at least one variable is required".into(),
            ));
        }
        let mut values = Vec::with_capacity(rows.len() * n);
        for (t, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidSeries(format!(
                    "row {t} has {} entries, expected {n}",
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        Self::from_flat(names, values)
    }

    /// Builds a series from one vector per variable.
    pub fn from_columns(names: Vec<String>, columns: &[Vec<f64>]) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::InvalidSeries(format!(
                "{} names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        let p = columns.first().map_or(0, Vec::len);
        if let Some((i, c)) = columns.iter().enumerate().find(|(_, c)| c.len() != p) {
            return Err(Error::InvalidSeries(format!(
                "column {i} has length {}, expected {p}",
                c.len()
            )));
        }
        let n = columns.len();
        let mut values = vec![0.0; p * n];
        for (i, col) in columns.iter().enumerate() {
            for (t, &x) in col.iter().enumerate() {
                values[t * n + i] = x;
            }
        }
        Self::from_flat(names, values)
    }

    /// Builds a series with generated names `x1..xn`.
    pub fn unnamed_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let names = (1..=columns.len()).map(|i| format!("x{i}")).collect();
        Self::from_columns(names, columns)
    }

    fn from_flat(names: Vec<String>, values: Vec<f64>) -> Result<Self> {
        let n = names.len();
        if n == 0 {
            return Err(Error::InvalidSeries(
                "at least one variable is required".into(),
            ));
        }
        let len = values.len() / n;
        if len < 2 {
            return Err(Error::InvalidSeries(format!(
                "series length {len} is below the minimum of 2"
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries(format!(
                "non-finite value at timestamp {}, variable {}",
                k / n,
                k % n
            )));
        }
        Ok(Self { names, values, len })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn get(&self, t: usize, var: usize) -> f64 {
        self.values[t * self.num_vars() + var]
    }

    pub fn row(&self, t: usize) -> &[f64] {
        let n = self.num_vars();
        &self.values[t * n..(t + 1) * n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.num_vars())
    }

    pub fn column(&self, var: usize) -> Vec<f64> {
        self.rows().map(|r| r[var]).collect()
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.num_vars()).map(|i| self.column(i)).collect()
    }

    pub(crate) fn set(&mut self, t: usize, var: usize, value: f64) {
        let n = self.num_vars();
        self.values[t * n + var] = value;
    }
}

/// Window length `q` and stride `r`, both in timestamps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct WindowSpec {
    pub length: usize,
    pub stride: usize,
}

impl WindowSpec {
    pub fn new(length: usize, stride: usize) -> Self {
        Self { length, stride }
    }

    pub fn validate(&self, series_len: usize) -> Result<()> {
        if self.length == 0 || self.length > series_len {
            return Err(Error::InvalidSpec(format!(
                "window length {} must lie in [1, {series_len}]",
                self.length
            )));
        }
        if self.stride == 0 {
            return Err(Error::InvalidSpec("stride must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of complete windows, `floor((p - q) / r) + 1`.
    pub fn count(&self, series_len: usize) -> usize {
        (series_len - self.length) / self.stride + 1
    }
}

/// A dense `vars x width` matrix, one row per variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    vars: usize,
    width: usize,
    data: Vec<f64>,
}

impl Block {
    pub fn new(vars: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != vars * width {
            return Err(Error::DimensionMismatch(format!(
                "{} values cannot fill a {vars}x{width} block",
                data.len()
            )));
        }
        Ok(Self { vars, width, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let width = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::DimensionMismatch("ragged block rows".into()));
        }
        Self::new(rows.len(), width, rows.concat())
    }

    pub fn zeros(vars: usize, width: usize) -> Self {
        Self {
            vars,
            width,
            data: vec![0.0; vars * width],
        }
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.vars, self.width)
    }

    pub fn row(&self, var: usize) -> &[f64] {
        &self.data[var * self.width..(var + 1) * self.width]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.width.max(1))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Squared distance of each variable row, `||a_i - b_i||^2`.
    pub fn row_sq_distances(&self, other: &Block) -> Result<Vec<f64>> {
        self.check_shape(other)?;
        Ok(self
            .rows()
            .zip(other.rows())
            .map(|(a, b)| sq_dist(a, b))
            .collect())
    }

    /// Unweighted squared Euclidean distance over all entries.
    pub fn sq_distance(&self, other: &Block) -> Result<f64> {
        self.check_shape(other)?;
        Ok(sq_dist(&self.data, &other.data))
    }

    pub(crate) fn check_shape(&self, other: &Block) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch(format!(
                "block shapes {:?} and {:?} differ",
                self.shape(),
                other.shape()
            )));
        }
        Ok(())
    }
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// The feature space a subsequence set lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureSpace {
    Raw,
    Autocorrelation,
}

/// Windowed subsequences with their start offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsequenceSet {
    spec: WindowSpec,
    space: FeatureSpace,
    starts: Vec<usize>,
    blocks: Vec<Block>,
}

impl SubsequenceSet {
    /// Assembles a set from explicit blocks; all blocks must share one shape.
    pub fn from_blocks(
        spec: WindowSpec,
        space: FeatureSpace,
        starts: Vec<usize>,
        blocks: Vec<Block>,
    ) -> Result<Self> {
        if starts.len() != blocks.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} start indices for {} blocks",
                starts.len(),
                blocks.len()
            )));
        }
        if let Some(first) = blocks.first() {
            if let Some(b) = blocks.iter().find(|b| b.shape() != first.shape()) {
                return Err(Error::DimensionMismatch(format!(
                    "block shape {:?} differs from {:?}",
                    b.shape(),
                    first.shape()
                )));
            }
        }
        Ok(Self {
            spec,
            space,
            starts,
            blocks,
        })
    }

    pub fn spec(&self) -> WindowSpec {
        self.spec
    }

    pub fn space(&self) -> FeatureSpace {
        self.space
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn starts(&self) -> &[usize] {
        &self.starts
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// `(vars, width)` of every block, or `None` for an empty set.
    pub fn block_shape(&self) -> Option<(usize, usize)> {
        self.blocks.first().map(Block::shape)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Block)> {
        self.starts.iter().copied().zip(&self.blocks)
    }
}

/// Z-score normalizes each variable using the population standard deviation.
/// Constant variables map to all zeros.
pub fn zscore_normalize(series: &MultiSeries) -> MultiSeries {
    let p = series.len() as f64;
    let mut out = series.clone();
    for var in 0..series.num_vars() {
        let col = series.column(var);
        let mean = col.iter().sum::<f64>() / p;
        let var_pop = col.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / p;
        let std = var_pop.sqrt();
        for (t, x) in col.iter().enumerate() {
            let z = if std < CONSTANT_STD_EPS {
                0.0
            } else {
                (x - mean) / std
            };
            out.set(t, var, z);
        }
    }
    out
}

/// Cuts the series into windows of `spec.length` timestamps every
/// `spec.stride` timestamps. A trailing partial window is dropped.
pub fn slide_windows(series: &MultiSeries, spec: WindowSpec) -> Result<SubsequenceSet> {
    spec.validate(series.len())?;
    let n = series.num_vars();
    let q = spec.length;
    let count = spec.count(series.len());
    let mut starts = Vec::with_capacity(count);
    let mut blocks = Vec::with_capacity(count);
    for j in 0..count {
        let start = j * spec.stride;
        let mut data = Vec::with_capacity(n * q);
        for var in 0..n {
            data.extend((start..start + q).map(|t| series.get(t, var)));
        }
        starts.push(start);
        blocks.push(Block {
            vars: n,
            width: q,
            data,
        });
    }
    Ok(SubsequenceSet {
        spec,
        space: FeatureSpace::Raw,
        starts,
        blocks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(col: Vec<f64>) -> MultiSeries {
        MultiSeries::unnamed_columns(&[col]).unwrap()
    }

    fn mean_std(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        (mean, var.sqrt())
    }

    #[test]
    fn zscore_two_points() {
        let z = zscore_normalize(&single(vec![1.0, 3.0]));
        assert_eq!(z.column(0), vec![-1.0, 1.0]);
    }

    #[test]
    fn zscore_constant_guard() {
        let z = zscore_normalize(&single(vec![5.0; 4]));
        assert_eq!(z.column(0), vec![0.0; 4]);
    }

    #[test]
    fn zscore_moments() {
        let z = zscore_normalize(&single(vec![2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]));
        let (mean, std) = mean_std(&z.column(0));
        assert!(mean.abs() < 1e-9);
        assert!((std - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zscore_idempotent() {
        let s = MultiSeries::unnamed_columns(&[
            vec![0.3, -1.2, 4.0, 2.2, 0.0],
            vec![10.0, 11.0, 9.5, 10.2, 10.1],
        ])
        .unwrap();
        let once = zscore_normalize(&s);
        let twice = zscore_normalize(&once);
        for (a, b) in once.rows().flatten().zip(twice.rows().flatten()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_non_finite_and_short() {
        assert!(MultiSeries::unnamed_columns(&[vec![1.0, f64::NAN]]).is_err());
        assert!(MultiSeries::unnamed_columns(&[vec![1.0]]).is_err());
        assert!(MultiSeries::unnamed_columns(&[vec![1.0, 2.0], vec![1.0]]).is_err());
    }

    #[test]
    fn window_count_ecg_setup() {
        let s = single((0..500).map(f64::from).collect());
        let w = slide_windows(&s, WindowSpec::new(5, 1)).unwrap();
        assert_eq!(w.len(), 496);
    }

    #[test]
    fn full_length_window() {
        let s = single((0..7).map(f64::from).collect());
        for r in [1, 3, 100] {
            let w = slide_windows(&s, WindowSpec::new(7, r)).unwrap();
            assert_eq!(w.len(), 1);
            assert_eq!(w.blocks()[0].row(0), s.column(0).as_slice());
        }
    }

    #[test]
    fn window_starts_by_enumeration() {
        let s = single((0..10).map(f64::from).collect());
        let w = slide_windows(&s, WindowSpec::new(4, 3)).unwrap();
        assert_eq!(w.starts(), &[0, 3, 6]);
    }

    #[test]
    fn window_count_exhaustive() {
        for p in 2..=30usize {
            let s = single((0..p).map(|t| t as f64).collect());
            for q in 1..=p {
                for r in 1..=p + 1 {
                    let w = slide_windows(&s, WindowSpec::new(q, r)).unwrap();
                    let brute: Vec<usize> = (0..p).filter(|s| s % r == 0 && s + q <= p).collect();
                    assert_eq!(w.starts(), brute.as_slice());
                    assert_eq!(w.len(), (p - q) / r + 1);
                    for (start, b) in w.iter() {
                        assert_eq!(b.width(), q);
                        assert_eq!(b.row(0)[0], start as f64);
                    }
                }
            }
        }
    }

    #[test]
    fn non_overlapping_windows_reassemble() {
        let s = MultiSeries::unnamed_columns(&[
            (0..23).map(|t| (t as f64).sin()).collect(),
            (0..23).map(|t| t as f64 * 0.5).collect(),
        ])
        .unwrap();
        let w = slide_windows(&s, WindowSpec::new(5, 5)).unwrap();
        for var in 0..2 {
            let joined: Vec<f64> = w
                .blocks()
                .iter()
                .flat_map(|b| b.row(var).to_vec())
                .collect();
            assert_eq!(joined, s.column(var)[..w.len() * 5].to_vec());
        }
    }

    #[test]
    fn invalid_specs() {
        let s = single(vec![1.0, 2.0, 3.0]);
        assert!(matches!(
            slide_windows(&s, WindowSpec::new(4, 1)),
            Err(Error::InvalidSpec(_))
        ));
        assert!(matches!(
            slide_windows(&s, WindowSpec::new(2, 0)),
            Err(Error::InvalidSpec(_))
        ));
        assert!(matches!(
            slide_windows(&s, WindowSpec::new(0, 1)),
            Err(Error::InvalidSpec(_))
        ));
    }
}
