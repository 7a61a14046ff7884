use ndarray::ArrayView2;

use super::{check_k, guarded_ratio, nearest, pairwise_distances, Algo, BaselineParams, BaselineScores, DENSITY_FLOOR};
use crate::error::Result;

/// Local Outlier Factor with exactly `k` neighbours per point (distance ties
/// resolved by index). A point whose mean reachability distance is zero
/// scores 1.
pub fn lof_scores(x: ArrayView2<f64>, k: usize) -> Result<BaselineScores> {
    let m = x.nrows();
    check_k(m, k)?;
    let dist = pairwise_distances(x);
    let hoods: Vec<Vec<usize>> = (0..m).map(|i| nearest(&dist, i, k)).collect();
    let k_distance: Vec<f64> = hoods
        .iter()
        .enumerate()
        .map(|(i, h)| dist[[i, *h.last().expect("k >= 1")]])
        .collect();
    let mean_reach: Vec<f64> = hoods
        .iter()
        .enumerate()
        .map(|(i, h)| {
            h.iter().map(|&o| k_distance[o].max(dist[[i, o]])).sum::<f64>() / k as f64
        })
        .collect();

    let scores = (0..m)
        .map(|i| {
            if mean_reach[i] == 0.0 {
                return 1.0;
            }
            let neighbour_density = hoods[i]
                .iter()
                .map(|&o| 1.0 / mean_reach[o].max(DENSITY_FLOOR))
                .sum::<f64>()
                / k as f64;
            guarded_ratio(neighbour_density, 1.0 / mean_reach[i])
        })
        .collect();
    Ok(BaselineScores {
        algo: Algo::Lof,
        scores,
        params: BaselineParams {
            k: Some(k),
            ..BaselineParams::default()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    #[test]
    fn duplicates_score_one() {
        let x = Array2::from_elem((6, 2), 0.3);
        let s = lof_scores(x.view(), 2).unwrap().scores;
        assert!(s.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn isolated_point_stands_out() {
        let x = array![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [5.0, 5.0]];
        let s = lof_scores(x.view(), 2).unwrap().scores;
        assert!(s[3] > 2.0, "{s:?}");
        for v in &s[..3] {
            assert!((0.8..=1.5).contains(v), "{s:?}");
        }
    }

    #[test]
    fn translation_invariant() {
        let x = array![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [5.0, 5.0], [2.0, 0.5]];
        let y = x.mapv(|v| v + 16.0);
        assert_eq!(lof_scores(x.view(), 2).unwrap().scores, lof_scores(y.view(), 2).unwrap().scores);
    }

    #[test]
    fn k_range() {
        let x = array![[0.0], [1.0], [2.0]];
        assert!(lof_scores(x.view(), 0).is_err());
        assert!(lof_scores(x.view(), 3).is_err());
    }
}
