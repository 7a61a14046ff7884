//! Backpropagation checked against central finite differences.

mod common;

use faultgraph::gnn::{init_model, loss_and_gradients, GnnModel};
use faultgraph::graph::{build_adjacency, propagation_matrix, Metric, PropagationMatrix};
use faultgraph::rng;
use ndarray::Array2;
use proptest::prelude::*;
use rand::Rng as _;

const EPS: f64 = 1e-5;

fn loss(model: &GnnModel, x: &Array2<f64>, p: &PropagationMatrix) -> f64 {
    loss_and_gradients(model, x.view(), p).unwrap().0
}

fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs()).max(1e-4);
    (analytic - numeric).abs() / scale
}

/// Largest relative error over every weight and bias entry.
fn max_relative_error(model: &GnnModel, x: &Array2<f64>, p: &PropagationMatrix) -> f64 {
    let (_, grads) = loss_and_gradients(model, x.view(), p).unwrap();
    let n_layers = grads.layers.len();
    let mut worst: f64 = 0.0;
    for l in 0..n_layers {
        let (dw, db) = &grads.layers[l];
        for idx in 0..dw.len() {
            let (r, c) = (idx / dw.ncols(), idx % dw.ncols());
            let numeric = central_difference(model, x, p, |m, v| layer_mut(m, l).weights[[r, c]] += v);
            worst = worst.max(relative_error(dw[[r, c]], numeric));
        }
        for j in 0..db.len() {
            let numeric = central_difference(model, x, p, |m, v| layer_mut(m, l).bias[j] += v);
            worst = worst.max(relative_error(db[j], numeric));
        }
    }
    worst
}

fn layer_mut(model: &mut GnnModel, l: usize) -> &mut faultgraph::gnn::Layer {
    let extra = model.extra_hidden.len();
    if l == 0 {
        &mut model.input
    } else if l <= extra {
        &mut model.extra_hidden[l - 1]
    } else {
        &mut model.output
    }
}

fn central_difference(
    model: &GnnModel,
    x: &Array2<f64>,
    p: &PropagationMatrix,
    nudge: impl Fn(&mut GnnModel, f64),
) -> f64 {
    let mut plus = model.clone();
    nudge(&mut plus, EPS);
    let mut minus = model.clone();
    nudge(&mut minus, -EPS);
    (loss(&plus, x, p) - loss(&minus, x, p)) / (2.0 * EPS)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn backprop_matches_finite_differences(
        m in 2usize..7,
        d in 1usize..5,
        h in 1usize..5,
        extra in 0usize..2,
        identity in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let x = common::uniform_matrix(m, d, seed);
        let p = if identity {
            PropagationMatrix::identity(m)
        } else {
            let k = 1 + (seed as usize) % (m - 1);
            propagation_matrix(&build_adjacency(x.view(), k, Metric::InvEuclidean).unwrap())
        };
        let mut model = init_model(d, h, extra, seed ^ 0x5eed).unwrap();
        let mut rng = rng::substream(seed, 99);
        for l in 0..extra + 2 {
            layer_mut(&mut model, l).bias.mapv_inplace(|_| rng.random_range(-0.5..0.5));
        }
        let err = max_relative_error(&model, &x, &p);
        prop_assert!(err < 1e-5, "max relative error {err:e}");
    }
}
