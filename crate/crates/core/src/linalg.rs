use ndarray::{Array2, ArrayView2};

/// Row-compressed matrix used for products with the propagation operator.
/// Entries within a row are kept in ascending column order, so products
/// accumulate in a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct SparseRows {
    ncols: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseRows {
    pub fn from_dense(dense: ArrayView2<f64>) -> Self {
        let rows = dense
            .outer_iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(_, w)| **w != 0.0)
                    .map(|(j, w)| (j, *w))
                    .collect()
            })
            .collect();
        SparseRows {
            ncols: dense.ncols(),
            rows,
        }
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// `self * m`
    pub fn mul(&self, m: ArrayView2<f64>) -> Array2<f64> {
        debug_assert_eq!(self.ncols, m.nrows());
        let mut out = Array2::zeros((self.rows.len(), m.ncols()));
        for (mut dst, row) in out.outer_iter_mut().zip(&self.rows) {
            for &(j, w) in row {
                dst.scaled_add(w, &m.row(j));
            }
        }
        out
    }

    /// `self^T * m`
    pub fn mul_transpose(&self, m: ArrayView2<f64>) -> Array2<f64> {
        debug_assert_eq!(self.rows.len(), m.nrows());
        let mut out = Array2::zeros((self.ncols, m.ncols()));
        for (i, row) in self.rows.iter().enumerate() {
            let src = m.row(i);
            for &(j, w) in row {
                out.row_mut(j).scaled_add(w, &src);
            }
        }
        out
    }
}
