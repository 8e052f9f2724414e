//! Degranulation: rebuilding subsequences from prototypes and memberships,
//! and the reconstruction error that doubles as the anomaly score.

use crate::error::{Error, Result};
use crate::fcm::{FuzzyModel, Partition};
use crate::series::Block;

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub reconstructed: Vec<Block>,
    pub per_subsequence_error: Vec<f64>,
    pub total_error: f64,
}

/// `w_hat_j = sum_i u_ij^m v_i / sum_i u_ij^m` for every item `j`.
pub fn reconstruct(partition: &Partition, centers: &[Block], m: f64) -> Result<Vec<Block>> {
    if partition.clusters() != centers.len() || centers.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "partition has {} clusters, {} prototypes given",
            partition.clusters(),
            centers.len()
        )));
    }
    let (vars, width) = centers[0].shape();
    (0..partition.items())
        .map(|j| {
            let mut out = Block::zeros(vars, width);
            let mut mass = 0.0;
            for (i, v) in centers.iter().enumerate() {
                let um = partition.get(i, j).powf(m);
                mass += um;
                for (o, x) in out.as_mut_slice().iter_mut().zip(v.as_slice()) {
                    *o += um * x;
                }
            }
            if mass <= 0.0 {
                return Err(Error::DegeneratePartition { index: j });
            }
            out.as_mut_slice().iter_mut().for_each(|o| *o /= mass);
            Ok(out)
        })
        .collect()
}

/// Per-subsequence unweighted squared reconstruction error.
pub fn anomaly_scores(original: &[Block], reconstructed: &[Block]) -> Result<Vec<f64>> {
    if original.len() != reconstructed.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} subsequences but {} reconstructions",
            original.len(),
            reconstructed.len()
        )));
    }
    original
        .iter()
        .zip(reconstructed)
        .map(|(w, w_hat)| w.sq_distance(w_hat))
        .collect()
}

/// Total reconstruction error `E = sum_j ||w_j - w_hat_j||^2`.
pub fn reconstruction_error(original: &[Block], reconstructed: &[Block]) -> Result<f64> {
    Ok(anomaly_scores(original, reconstructed)?.iter().sum())
}

/// Reconstructs `data` from a fitted model and scores every item.
pub fn reconstruct_model(model: &FuzzyModel, data: &[Block]) -> Result<Reconstruction> {
    let reconstructed = reconstruct(&model.partition, &model.centers, model.fuzzifier)?;
    let per_subsequence_error = anomaly_scores(data, &reconstructed)?;
    let total_error = per_subsequence_error.iter().sum();
    Ok(Reconstruction {
        reconstructed,
        per_subsequence_error,
        total_error,
    })
}
