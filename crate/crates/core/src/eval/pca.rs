use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    /// m x dims projected coordinates.
    pub coords: Array2<f64>,
    /// Variance along each component, descending.
    pub variances: Vec<f64>,
    /// d x dims principal directions (unit columns).
    pub components: Array2<f64>,
}

/// Projects the column-centred data onto its leading principal directions.
/// Each direction's largest-magnitude loading is made positive.
pub fn pca_project(x: ArrayView2<f64>, dims: usize) -> Result<Pca> {
    let (m, d) = x.dim();
    if m < 2 {
        return Err(Error::param("PCA needs at least two rows"));
    }
    if dims == 0 || dims > d {
        return Err(Error::param(format!("cannot project {d} columns onto {dims} components")));
    }
    let mean = x.mean_axis(Axis(0)).expect("non-empty");
    let centred = &x - &mean;
    let cov = centred.t().dot(&centred) / (m - 1) as f64;

    let eig = SymmetricEigen::new(DMatrix::from_fn(d, d, |i, j| cov[[i, j]]));
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let mut components = Array2::zeros((d, dims));
    let mut variances = Vec::with_capacity(dims);
    for (c, &src) in order.iter().take(dims).enumerate() {
        let v = eig.eigenvectors.column(src);
        let pivot = v
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .expect("non-empty");
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        for r in 0..d {
            components[[r, c]] = sign * v[r];
        }
        variances.push(eig.eigenvalues[src].max(0.0));
    }
    let coords = centred.dot(&components);
    Ok(Pca {
        coords,
        variances,
        components,
    })
}
