use ndarray::ArrayView2;

use super::{Algo, BaselineParams, BaselineScores};
use crate::error::Result;
use crate::gnn::{fit_and_score, TrainConfig};
use crate::graph::PropagationMatrix;

/// The graph autoencoder with the graph removed: same layers and trainer,
/// identity propagation, target `X`. Scores use the same per-row
/// `1/(2d) * squared error` as the fault factor.
pub fn ae_scores(x: ArrayView2<f64>, cfg: &TrainConfig) -> Result<BaselineScores> {
    let identity = PropagationMatrix::identity(x.nrows());
    let (_, report) = fit_and_score(x, &identity, x, cfg, 0)?;
    Ok(BaselineScores {
        algo: Algo::Ae,
        scores: report.ff,
        params: BaselineParams {
            eta: Some(cfg.eta),
            iters: Some(cfg.iters),
            hidden: Some(cfg.hidden),
            seed: Some(cfg.seed),
            ..BaselineParams::default()
        },
    })
}
