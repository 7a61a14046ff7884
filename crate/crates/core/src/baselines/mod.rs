//! Comparison detectors: a plain reconstruction autoencoder, Local Outlier
//! Factor and Connectivity-based Outlier Factor. All emit one score per
//! object, higher meaning more anomalous.

mod ae;
mod cof;
mod lof;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ae::ae_scores;
pub use cof::cof_scores;
pub use lof::lof_scores;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Ae,
    Lof,
    Cof,
}

impl Algo {
    pub fn as_str(self) -> &'static str {
        match self {
            Algo::Ae => "ae",
            Algo::Lof => "lof",
            Algo::Cof => "cof",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ae" => Ok(Algo::Ae),
            "lof" => Ok(Algo::Lof),
            "cof" => Ok(Algo::Cof),
            other => Err(Error::param(format!("unknown baseline {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BaselineParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iters: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hidden: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineScores {
    pub algo: Algo,
    pub scores: Vec<f64>,
    pub params: BaselineParams,
}

/// Ratios whose denominator vanishes on duplicate points: `0/0` is 1, any
/// other zero denominator is replaced by this floor.
const DENSITY_FLOOR: f64 = 1e-10;

fn guarded_ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else if num == 0.0 {
        1.0
    } else {
        num / DENSITY_FLOOR
    }
}

fn check_k(m: usize, k: usize) -> Result<()> {
    if k == 0 || k >= m {
        return Err(Error::param(format!(
            "k must satisfy 1 <= k < m = {m}, got {k}"
        )));
    }
    Ok(())
}

fn pairwise_distances(x: ArrayView2<f64>) -> Array2<f64> {
    let m = x.nrows();
    let mut d = Array2::zeros((m, m));
    for i in 0..m {
        for j in (i + 1)..m {
            let v: f64 = x
                .row(i)
                .iter()
                .zip(x.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            d[[i, j]] = v;
            d[[j, i]] = v;
        }
    }
    d
}

/// The `k` nearest other points of `i`, nearest first, ties by index.
fn nearest(dist: &Array2<f64>, i: usize, k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..dist.nrows()).filter(|&j| j != i).collect();
    idx.sort_by(|&a, &b| dist[[i, a]].total_cmp(&dist[[i, b]]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}
