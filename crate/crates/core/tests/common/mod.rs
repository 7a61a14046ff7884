#![allow(dead_code)]

use faultgraph::rng;
use ndarray::Array2;
use rand::Rng as _;
use rand_distr::StandardNormal;

/// `inliers` standard-normal points in `d` dimensions followed by `outliers`
/// points shifted by `shift` in every coordinate.
pub fn shifted_gaussians(inliers: usize, outliers: usize, d: usize, shift: f64, seed: u64) -> (Array2<f64>, Vec<bool>) {
    let mut rng = rng::seeded(seed);
    let m = inliers + outliers;
    let mut x = Array2::zeros((m, d));
    for i in 0..m {
        let offset = if i >= inliers { shift } else { 0.0 };
        for j in 0..d {
            let z: f64 = rng.sample(StandardNormal);
            x[[i, j]] = z + offset;
        }
    }
    let faults = (0..m).map(|i| i >= inliers).collect();
    (x, faults)
}

/// Column-wise min-max scaling onto [0, 1].
pub fn minmax(mut x: Array2<f64>) -> Array2<f64> {
    for mut col in x.columns_mut() {
        let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        col.mapv_inplace(|v| if span > 0.0 { (v - lo) / span } else { 0.0 });
    }
    x
}

pub fn uniform_matrix(m: usize, d: usize, seed: u64) -> Array2<f64> {
    let mut rng = rng::seeded(seed);
    Array2::from_shape_simple_fn((m, d), || rng.random::<f64>())
}
