//! Weighted k-nearest-neighbour digraph over feature rows.
//!
//! Every object `i` receives a directed edge from each of its `k` most
//! similar objects `j`, weighted by that neighbour's share of the total
//! similarity of the neighbourhood. The adjacency stores that edge at
//! `A[j][i]`, so each column of `A` holds one neighbourhood; the diagonal is 1.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SparseRows;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// `1 / (1 + ||a - b||)`
    #[default]
    InvEuclidean,
    /// `(1 + cos) / 2`
    Cosine01,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::InvEuclidean => "inv_euclidean",
            Metric::Cosine01 => "cosine01",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inv_euclidean" => Ok(Metric::InvEuclidean),
            "cosine01" => Ok(Metric::Cosine01),
            other => Err(Error::param(format!("unknown metric {other:?}"))),
        }
    }
}

fn similarity_unchecked(a: ArrayView1<f64>, b: ArrayView1<f64>, metric: Metric) -> f64 {
    match metric {
        Metric::InvEuclidean => {
            let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
            1.0 / (1.0 + d2.sqrt())
        }
        Metric::Cosine01 => {
            let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            let na = a.dot(&a).sqrt();
            let nb = b.dot(&b).sqrt();
            let cos = if na > 0.0 && nb > 0.0 {
                (dot / (na * nb)).clamp(-1.0, 1.0)
            } else {
                0.0
            };
            (1.0 + cos) / 2.0
        }
    }
}

/// Similarity in `(0, 1]`, 1 meaning identical.
pub fn similarity(a: ArrayView1<f64>, b: ArrayView1<f64>, metric: Metric) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::shape(format!(
            "vectors of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(similarity_unchecked(a, b, metric))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyMatrix {
    pub weights: Array2<f64>,
    pub k: usize,
    pub metric: Metric,
}

impl AdjacencyMatrix {
    pub fn len(&self) -> usize {
        self.weights.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.nrows() == 0
    }

    /// Neighbours of object `i` with their edge weights, ascending index.
    pub fn neighbourhood(&self, i: usize) -> Vec<(usize, f64)> {
        self.weights
            .column(i)
            .iter()
            .enumerate()
            .filter(|&(j, w)| j != i && *w != 0.0)
            .map(|(j, w)| (j, *w))
            .collect()
    }
}

/// The `k` objects most similar to row `i`, most similar first; equal
/// similarities go to the lower index.
fn nearest(x: ArrayView2<f64>, i: usize, k: usize, metric: Metric) -> Vec<(usize, f64)> {
    let target = x.row(i);
    let mut candidates: Vec<(usize, f64)> = (0..x.nrows())
        .filter(|&j| j != i)
        .map(|j| (j, similarity_unchecked(target, x.row(j), metric)))
        .collect();
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    candidates.truncate(k);
    candidates
}

pub fn build_adjacency(x: ArrayView2<f64>, k: usize, metric: Metric) -> Result<AdjacencyMatrix> {
    let m = x.nrows();
    if k == 0 || k >= m {
        return Err(Error::param(format!(
            "k must satisfy 1 <= k < m = {m}, got {k}"
        )));
    }
    let columns: Vec<Vec<(usize, f64)>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let hood = nearest(x, i, k, metric);
            let total: f64 = hood.iter().map(|(_, s)| s).sum();
            hood.into_iter()
                .map(|(j, s)| (j, if total > 0.0 { s / total } else { 1.0 / k as f64 }))
                .collect()
        })
        .collect();

    let mut weights = Array2::zeros((m, m));
    for (i, hood) in columns.into_iter().enumerate() {
        for (j, w) in hood {
            weights[[j, i]] = w;
        }
        weights[[i, i]] = 1.0;
    }
    Ok(AdjacencyMatrix { weights, k, metric })
}

/// Left-multiplication operator `P = A^T`: row `i` of `P * X` is `X_i` plus
/// the weighted sum of `i`'s neighbours.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationMatrix {
    values: Array2<f64>,
    sparse: SparseRows,
}

impl PropagationMatrix {
    pub fn from_dense(values: Array2<f64>) -> Result<Self> {
        if values.nrows() != values.ncols() {
            return Err(Error::shape(format!(
                "propagation matrix must be square, got {:?}",
                values.dim()
            )));
        }
        let sparse = SparseRows::from_dense(values.view());
        Ok(PropagationMatrix { values, sparse })
    }

    pub fn identity(m: usize) -> Self {
        Self::from_dense(Array2::eye(m)).expect("square")
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    /// `P * m`
    pub fn apply(&self, m: ArrayView2<f64>) -> Array2<f64> {
        self.sparse.mul(m)
    }

    /// `P^T * m`
    pub fn apply_transpose(&self, m: ArrayView2<f64>) -> Array2<f64> {
        self.sparse.mul_transpose(m)
    }

    pub(crate) fn check_rows(&self, rows: usize, what: &str) -> Result<()> {
        if self.sparse.nrows() != rows || self.sparse.ncols() != rows {
            return Err(Error::shape(format!(
                "{what} has {rows} rows, propagation matrix is {:?}",
                self.values.dim()
            )));
        }
        Ok(())
    }
}

pub fn propagation_matrix(a: &AdjacencyMatrix) -> PropagationMatrix {
    PropagationMatrix::from_dense(a.weights.t().to_owned()).expect("adjacency is square")
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn line() -> Array2<f64> {
        array![[0.0], [1.0], [3.0]]
    }

    #[test]
    fn similarity_values() {
        let a = array![1.0, 2.0, 3.0];
        for metric in [Metric::InvEuclidean, Metric::Cosine01] {
            assert_eq!(similarity(a.view(), a.view(), metric).unwrap(), 1.0);
        }
        let b = array![1.0, 2.0, 4.0];
        assert_eq!(similarity(a.view(), b.view(), Metric::InvEuclidean).unwrap(), 0.5);
        let e1 = array![1.0, 0.0];
        let e2 = array![0.0, 1.0];
        assert_eq!(similarity(e1.view(), e2.view(), Metric::Cosine01).unwrap(), 0.5);
        let zero = array![0.0, 0.0];
        assert_eq!(similarity(zero.view(), e2.view(), Metric::Cosine01).unwrap(), 0.5);
        assert!(similarity(a.view(), e1.view(), Metric::Cosine01).is_err());
    }

    #[test]
    fn three_points_k1() {
        let a = build_adjacency(line().view(), 1, Metric::InvEuclidean).unwrap();
        let expected = array![[1.0, 1.0, 0.0], [1.0, 1.0, 1.0], [0.0, 0.0, 1.0]];
        assert_eq!(a.weights, expected);
    }

    #[test]
    fn three_points_k2_first_column() {
        let a = build_adjacency(line().view(), 2, Metric::InvEuclidean).unwrap();
        // sims 0.5 (from x2) and 0.25 (from x3)
        assert!((a.weights[[1, 0]] - 2.0 / 3.0).abs() < 1e-15);
        assert!((a.weights[[2, 0]] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn asymmetric_weights() {
        let a = build_adjacency(line().view(), 2, Metric::InvEuclidean).unwrap();
        // W(x1, x2) = 2/3 sits at A[2][1]; W(x2, x1) = 0.5/(0.5 + 1/3) = 0.6 at A[1][2]
        assert!((a.weights[[1, 0]] - a.weights[[0, 1]]).abs() > 0.05);
        assert!((a.weights[[0, 1]] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn ties_go_to_lower_index() {
        let x = array![[0.0], [-1.0], [1.0]];
        let a = build_adjacency(x.view(), 1, Metric::InvEuclidean).unwrap();
        assert_eq!(a.neighbourhood(0), vec![(1, 1.0)]);
    }

    #[test]
    fn propagation_is_transpose() {
        let a = build_adjacency(line().view(), 1, Metric::InvEuclidean).unwrap();
        let p = propagation_matrix(&a);
        assert_eq!(p.values()[[0, 1]], 1.0);
        assert_eq!(p.values()[[1, 0]], 1.0);
        assert_eq!(p.values()[[2, 1]], 1.0);
        assert_eq!(p.values().t(), a.weights);
        for row in p.values().outer_iter() {
            assert!((row.sum() - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn k_out_of_range() {
        assert!(build_adjacency(line().view(), 0, Metric::InvEuclidean).is_err());
        assert!(build_adjacency(line().view(), 3, Metric::InvEuclidean).is_err());
    }

    #[test]
    fn translation_invariance_inv_euclidean() {
        let x = array![[0.0, 1.0], [0.5, 0.25], [3.0, 1.0], [2.0, 2.0], [0.125, 0.75]];
        let shifted = x.mapv(|v| v + 8.0);
        let a = build_adjacency(x.view(), 2, Metric::InvEuclidean).unwrap();
        let b = build_adjacency(shifted.view(), 2, Metric::InvEuclidean).unwrap();
        assert_eq!(a, b);
    }
}
