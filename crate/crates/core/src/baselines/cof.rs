use ndarray::{Array2, ArrayView2};

use super::{check_k, guarded_ratio, nearest, pairwise_distances, Algo, BaselineParams, BaselineScores};
use crate::error::Result;

/// Average chaining distance of `p` along its set-based nearest path through
/// `hood`. The path grows greedily from `p`, each step adding the remaining
/// neighbour closest to the set built so far (lowest index on ties); step
/// `i` of `k` is weighted `2 (k + 1 - i) / (k (k + 1))`.
fn chaining_distance(dist: &Array2<f64>, p: usize, hood: &[usize]) -> f64 {
    let k = hood.len();
    let mut in_path = vec![p];
    let mut remaining: Vec<usize> = hood.to_vec();
    remaining.sort_unstable();
    let mut total = 0.0;
    for step in 1..=k {
        let (pos, cost) = remaining
            .iter()
            .enumerate()
            .map(|(pos, &o)| {
                let c = in_path
                    .iter()
                    .map(|&s| dist[[s, o]])
                    .fold(f64::INFINITY, f64::min);
                (pos, c)
            })
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .expect("non-empty remainder");
        let weight = 2.0 * (k + 1 - step) as f64 / (k * (k + 1)) as f64;
        total += weight * cost;
        in_path.push(remaining.remove(pos));
    }
    total
}

/// Connectivity-based Outlier Factor: a point's chaining distance over the
/// mean chaining distance of its `k` neighbours.
pub fn cof_scores(x: ArrayView2<f64>, k: usize) -> Result<BaselineScores> {
    let m = x.nrows();
    check_k(m, k)?;
    let dist = pairwise_distances(x);
    let hoods: Vec<Vec<usize>> = (0..m).map(|i| nearest(&dist, i, k)).collect();
    let chain: Vec<f64> = (0..m).map(|i| chaining_distance(&dist, i, &hoods[i])).collect();
    let scores = (0..m)
        .map(|i| {
            let mean = hoods[i].iter().map(|&o| chain[o]).sum::<f64>() / k as f64;
            guarded_ratio(chain[i], mean)
        })
        .collect();
    Ok(BaselineScores {
        algo: Algo::Cof,
        scores,
        params: BaselineParams {
            k: Some(k),
            ..BaselineParams::default()
        },
    })
}
