use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scores, ranking and flagged objects of one detection run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub ff: Vec<f64>,
    /// Object indices by descending fault factor.
    pub ranking: Vec<usize>,
    /// The first `n` entries of `ranking`.
    pub flagged: Vec<usize>,
    pub n: usize,
    pub loss_history: Vec<f64>,
}

/// Per-object fault factor `1/(2d) * sum_f (X'_f - Z_f)^2`.
pub fn fault_factors(target: ArrayView2<f64>, output: ArrayView2<f64>) -> Result<Vec<f64>> {
    if target.dim() != output.dim() {
        return Err(Error::shape(format!(
            "target {:?} vs output {:?}",
            target.dim(),
            output.dim()
        )));
    }
    let scale = 1.0 / (2.0 * target.ncols() as f64);
    Ok(target
        .outer_iter()
        .zip(output.outer_iter())
        .map(|(t, z)| t.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() * scale)
        .collect())
}

/// Indices sorted by descending score; equal scores keep ascending index.
pub fn ranking(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx
}

/// The `n` highest-scoring objects, highest first.
pub fn detect_top_n(ff: &[f64], n: usize) -> Result<Vec<usize>> {
    if n > ff.len() {
        return Err(Error::param(format!(
            "cannot flag {n} of {} objects",
            ff.len()
        )));
    }
    let mut r = ranking(ff);
    r.truncate(n);
    Ok(r)
}
