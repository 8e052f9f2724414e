//! Fuzzy C-Means over multivariate subsequences with a variable-weighted
//! squared Euclidean distance.
//!
//! With uniform weights this is the standard FCM: memberships only depend on
//! distance ratios, so the constant `1/n` factor cancels.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::series::{sq_dist, Block, SubsequenceSet};

/// Prototype updates with less total membership mass than this fail.
pub const EMPTY_CLUSTER_EPS: f64 = 1e-300;

/// Per-variable weights on the probability simplex.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidConfig("weight vector is empty".into()));
        }
        if values.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidConfig(format!(
                "weights must be finite and nonnegative: {values:?}"
            )));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "weights must sum to 1, got {sum}"
            )));
        }
        Ok(Self(values))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Membership matrix `U`, `clusters x items`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    clusters: usize,
    items: usize,
    data: Vec<f64>,
}

impl Partition {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let items = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || rows.iter().any(|r| r.len() != items) {
            return Err(Error::DimensionMismatch("ragged or empty partition".into()));
        }
        Ok(Self {
            clusters: rows.len(),
            items,
            data: rows.concat(),
        })
    }

    /// Seeded random partition: uniform draws, each column normalized.
    pub fn random(clusters: usize, items: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = vec![0.0; clusters * items];
        for j in 0..items {
            let mut total = 0.0;
            for i in 0..clusters {
                // open interval keeps every column sum strictly positive
                let u: f64 = rng.gen_range(f64::EPSILON..1.0);
                data[i * items + j] = u;
                total += u;
            }
            for i in 0..clusters {
                data[i * items + j] /= total;
            }
        }
        Self {
            clusters,
            items,
            data,
        }
    }

    pub fn clusters(&self) -> usize {
        self.clusters
    }

    pub fn items(&self) -> usize {
        self.items
    }

    pub fn get(&self, cluster: usize, item: usize) -> f64 {
        self.data[cluster * self.items + item]
    }

    pub fn row(&self, cluster: usize) -> &[f64] {
        &self.data[cluster * self.items..(cluster + 1) * self.items]
    }

    pub fn column(&self, item: usize) -> Vec<f64> {
        (0..self.clusters).map(|i| self.get(i, item)).collect()
    }

    pub fn max_abs_diff(&self, other: &Partition) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Convergence and initialization settings for [`fit_fcm`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FcmParams {
    /// Stop once the largest membership change falls below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Seed of the initial random partition.
    pub seed: u64,
}

impl Default for FcmParams {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 300,
            seed: 0,
        }
    }
}

/// A fitted clustering: prototypes, memberships and the objective they reach.
#[derive(Debug, Clone)]
pub struct FuzzyModel {
    pub centers: Vec<Block>,
    pub partition: Partition,
    pub weights: WeightVector,
    pub fuzzifier: f64,
    pub objective: f64,
    /// Objective after every iteration; non-increasing.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// `sum_i lambda_i * ||w_i - v_i||^2`.
pub fn weighted_distance(w: &Block, v: &Block, weights: &WeightVector) -> Result<f64> {
    check_weights(w, weights.as_slice())?;
    w.check_shape(v)?;
    Ok(weighted_sq(w, v, weights.as_slice()))
}

fn weighted_sq(w: &Block, v: &Block, weights: &[f64]) -> f64 {
    w.rows()
        .zip(v.rows())
        .zip(weights)
        .map(|((a, b), l)| l * sq_dist(a, b))
        .sum()
}

fn check_weights(w: &Block, weights: &[f64]) -> Result<()> {
    if w.vars() != weights.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {} variables",
            weights.len(),
            w.vars()
        )));
    }
    Ok(())
}

fn check_data(data: &[Block]) -> Result<(usize, usize)> {
    let shape = data
        .first()
        .map(Block::shape)
        .ok_or_else(|| Error::InvalidConfig("no subsequences to cluster".into()))?;
    if data.iter().any(|b| b.shape() != shape) {
        return Err(Error::DimensionMismatch(
            "subsequences differ in shape".into(),
        ));
    }
    Ok(shape)
}

fn check_fuzzifier(m: f64) -> Result<()> {
    if !(m.is_finite() && m > 1.0) {
        return Err(Error::InvalidConfig(format!(
            "fuzzifier must exceed 1, got {m}"
        )));
    }
    Ok(())
}

/// Prototype update: the `u^m`-weighted mean of all subsequences per cluster.
pub fn update_prototypes(partition: &Partition, data: &[Block], m: f64) -> Result<Vec<Block>> {
    let (vars, width) = check_data(data)?;
    if partition.items() != data.len() {
        return Err(Error::DimensionMismatch(format!(
            "partition covers {} items, data has {}",
            partition.items(),
            data.len()
        )));
    }
    (0..partition.clusters())
        .map(|i| {
            // accumulate offsets from the first item so that coinciding
            // items give a prototype exactly equal to them
            let origin = data[0].as_slice();
            let mut offset = Block::zeros(vars, width);
            let mut mass = 0.0;
            for (u, w) in partition.row(i).iter().zip(data) {
                let um = u.powf(m);
                mass += um;
                for ((c, x), o) in offset
                    .as_mut_slice()
                    .iter_mut()
                    .zip(w.as_slice())
                    .zip(origin)
                {
                    *c += um * (x - o);
                }
            }
            if mass < EMPTY_CLUSTER_EPS {
                return Err(Error::DegenerateCluster { cluster: i });
            }
            offset
                .as_mut_slice()
                .iter_mut()
                .zip(origin)
                .for_each(|(c, o)| *c = o + *c / mass);
            Ok(offset)
        })
        .collect()
}

/// Membership update against fixed prototypes, using the weighted distance.
///
/// Items that coincide with one or more prototypes split their membership
/// evenly across those prototypes.
pub fn update_partition(
    centers: &[Block],
    data: &[Block],
    weights: &WeightVector,
    m: f64,
) -> Result<Partition> {
    update_partition_raw(centers, data, weights.as_slice(), m)
}

fn update_partition_raw(
    centers: &[Block],
    data: &[Block],
    weights: &[f64],
    m: f64,
) -> Result<Partition> {
    check_fuzzifier(m)?;
    check_data(data)?;
    if centers.is_empty() {
        return Err(Error::InvalidConfig("no prototypes".into()));
    }
    check_weights(&data[0], weights)?;
    for c in centers {
        data[0].check_shape(c)?;
    }
    let clusters = centers.len();
    let items = data.len();
    let exponent = 1.0 / (m - 1.0);
    let mut out = vec![0.0; clusters * items];
    let mut dist = vec![0.0; clusters];
    for (j, w) in data.iter().enumerate() {
        for (d, v) in dist.iter_mut().zip(centers) {
            *d = weighted_sq(w, v, weights);
        }
        let zeros = dist.iter().filter(|&&d| d <= 0.0).count();
        if zeros > 0 {
            let share = 1.0 / zeros as f64;
            for (i, &d) in dist.iter().enumerate() {
                out[i * items + j] = if d <= 0.0 { share } else { 0.0 };
            }
            continue;
        }
        for i in 0..clusters {
            let denom: f64 = dist.iter().map(|dl| (dist[i] / dl).powf(exponent)).sum();
            out[i * items + j] = 1.0 / denom;
        }
    }
    Ok(Partition {
        clusters,
        items,
        data: out,
    })
}

/// Fuzzy objective `sum_i sum_j u_ij^m d(w_j, v_i)` with the weighted distance.
pub fn objective(
    partition: &Partition,
    centers: &[Block],
    data: &[Block],
    weights: &WeightVector,
    m: f64,
) -> Result<f64> {
    objective_raw(partition, centers, data, weights.as_slice(), m)
}

fn objective_raw(
    partition: &Partition,
    centers: &[Block],
    data: &[Block],
    weights: &[f64],
    m: f64,
) -> Result<f64> {
    if partition.clusters() != centers.len() || partition.items() != data.len() {
        return Err(Error::DimensionMismatch(
            "partition does not match prototypes and data".into(),
        ));
    }
    let mut q = 0.0;
    for (i, v) in centers.iter().enumerate() {
        for (u, w) in partition.row(i).iter().zip(data) {
            q += u.powf(m) * weighted_sq(w, v, weights);
        }
    }
    Ok(q)
}

/// Alternating-optimization state, exposed so callers can observe iterates.
///
/// One [`step`](FcmSolver::step) recomputes the prototypes from the current
/// memberships and then the memberships from those prototypes.
#[derive(Debug, Clone)]
pub struct FcmSolver<'a> {
    data: &'a [Block],
    weights: Vec<f64>,
    m: f64,
    partition: Partition,
    centers: Vec<Block>,
    objective: f64,
    trace: Vec<f64>,
}

impl<'a> FcmSolver<'a> {
    pub fn new(
        data: &'a [Block],
        weights: &WeightVector,
        m: f64,
        initial: Partition,
    ) -> Result<Self> {
        Self::with_raw_weights(data, weights.as_slice().to_vec(), m, initial)
    }

    /// Like [`new`](Self::new) but accepts any nonnegative weights, not only
    /// points of the simplex.
    pub fn with_raw_weights(
        data: &'a [Block],
        weights: Vec<f64>,
        m: f64,
        initial: Partition,
    ) -> Result<Self> {
        check_fuzzifier(m)?;
        check_data(data)?;
        check_weights(&data[0], &weights)?;
        if initial.items() != data.len() {
            return Err(Error::DimensionMismatch(format!(
                "initial partition covers {} items, data has {}",
                initial.items(),
                data.len()
            )));
        }
        Ok(Self {
            data,
            weights,
            m,
            partition: initial,
            centers: Vec::new(),
            objective: f64::INFINITY,
            trace: Vec::new(),
        })
    }

    /// Runs one prototype/membership sweep and returns the largest
    /// membership change.
    pub fn step(&mut self) -> Result<f64> {
        let centers = update_prototypes(&self.partition, self.data, self.m)?;
        let next = update_partition_raw(&centers, self.data, &self.weights, self.m)?;
        let delta = next.max_abs_diff(&self.partition);
        self.objective = objective_raw(&next, &centers, self.data, &self.weights, self.m)?;
        self.trace.push(self.objective);
        self.partition = next;
        self.centers = centers;
        Ok(delta)
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    /// Prototypes from the latest step; empty before the first step.
    pub fn centers(&self) -> &[Block] {
        &self.centers
    }

    pub fn objective(&self) -> f64 {
        self.objective
    }

    pub fn trace(&self) -> &[f64] {
        &self.trace
    }

    fn into_model(self, weights: WeightVector, converged: bool) -> FuzzyModel {
        FuzzyModel {
            iterations: self.trace.len(),
            centers: self.centers,
            partition: self.partition,
            weights,
            fuzzifier: self.m,
            objective: self.objective,
            objective_trace: self.trace,
            converged,
        }
    }
}

/// Fits the weighted FCM from a seeded random partition.
pub fn fit_fcm(
    set: &SubsequenceSet,
    clusters: usize,
    m: f64,
    weights: &WeightVector,
    params: &FcmParams,
) -> Result<FuzzyModel> {
    fit_fcm_blocks(set.blocks(), clusters, m, weights, params)
}

pub fn fit_fcm_blocks(
    data: &[Block],
    clusters: usize,
    m: f64,
    weights: &WeightVector,
    params: &FcmParams,
) -> Result<FuzzyModel> {
    if clusters < 2 || clusters > data.len() {
        return Err(Error::InvalidConfig(format!(
            "cluster count {clusters} must lie in [2, {}]",
            data.len()
        )));
    }
    if params.max_iter == 0 {
        return Err(Error::InvalidConfig("max_iter must be at least 1".into()));
    }
    let initial = Partition::random(clusters, data.len(), params.seed);
    let mut solver = FcmSolver::new(data, weights, m, initial)?;
    let mut converged = false;
    for _ in 0..params.max_iter {
        if solver.step()? < params.tol {
            converged = true;
            break;
        }
    }
    Ok(solver.into_model(weights.clone(), converged))
}
