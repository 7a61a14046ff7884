//! Graph-propagating autoencoder.
//!
//! Each layer first mixes every object's input with its in-neighbours through
//! the propagation matrix `P`, then applies an affine map and a logistic
//! sigmoid:
//!
//! ```text
//! H = sigma(P X W0 + b0)
//! Z = sigma(P H W1 + b1)
//! ```
//!
//! The network is trained by full-batch gradient descent to reproduce the
//! two-hop aggregate `X' = P P X`, minimising `J = 1/2 * sum (X' - Z)^2`.
//! Objects it fails to reproduce get large fault factors.

mod score;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::PropagationMatrix;
use crate::rng;

pub use score::{detect_top_n, fault_factors, ranking, DetectionReport};

/// One affine map `in -> out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Layer {
    fn glorot(fan_in: usize, fan_out: usize, rng: &mut rng::Rng) -> Self {
        let r = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let dist = Uniform::new_inclusive(-r, r).expect("finite bound");
        let weights = Array2::from_shape_simple_fn((fan_in, fan_out), || dist.sample(rng));
        Layer {
            weights,
            bias: Array1::zeros(fan_out),
        }
    }

    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Layer {
            weights: Array2::zeros((fan_in, fan_out)),
            bias: Array1::zeros(fan_out),
        }
    }

    fn is_finite(&self) -> bool {
        self.weights.iter().chain(self.bias.iter()).all(|v| v.is_finite())
    }
}

/// Input layer `d -> h`, optional extra `h -> h` hidden layers, output `h -> d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnnModel {
    pub input: Layer,
    #[serde(default)]
    pub extra_hidden: Vec<Layer>,
    pub output: Layer,
}

impl GnnModel {
    pub fn features(&self) -> usize {
        self.input.weights.nrows()
    }

    pub fn hidden(&self) -> usize {
        self.input.weights.ncols()
    }

    pub fn layers(&self) -> impl Iterator<Item = &Layer> {
        std::iter::once(&self.input)
            .chain(self.extra_hidden.iter())
            .chain(std::iter::once(&self.output))
    }

    fn layers_mut(&mut self) -> impl Iterator<Item = &mut Layer> {
        std::iter::once(&mut self.input)
            .chain(self.extra_hidden.iter_mut())
            .chain(std::iter::once(&mut self.output))
    }

    /// Checks the layer chain `d -> h -> ... -> h -> d`.
    pub fn validate(&self) -> Result<()> {
        let d = self.features();
        let h = self.hidden();
        let mut expected_in = d;
        let n = self.extra_hidden.len() + 2;
        for (i, layer) in self.layers().enumerate() {
            let out = if i + 1 == n { d } else { h };
            if layer.weights.dim() != (expected_in, out) || layer.bias.len() != out {
                return Err(Error::shape(format!(
                    "layer {i} is {:?} with bias {}, expected ({expected_in}, {out})",
                    layer.weights.dim(),
                    layer.bias.len()
                )));
            }
            if !layer.is_finite() {
                return Err(Error::param(format!("layer {i} has non-finite entries")));
            }
            expected_in = out;
        }
        Ok(())
    }
}

/// Glorot-uniform weights, zero biases. Weights are drawn layer by layer in
/// row-major order from one seeded stream.
pub fn init_model(d: usize, h: usize, extra_hidden_layers: usize, seed: u64) -> Result<GnnModel> {
    if d == 0 || h == 0 {
        return Err(Error::param("feature and hidden widths must be positive"));
    }
    let mut rng = rng::seeded(seed);
    let input = Layer::glorot(d, h, &mut rng);
    let extra_hidden = (0..extra_hidden_layers)
        .map(|_| Layer::glorot(h, h, &mut rng))
        .collect();
    let output = Layer::glorot(h, d, &mut rng);
    Ok(GnnModel {
        input,
        extra_hidden,
        output,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub eta: f64,
    pub iters: usize,
    pub hidden: usize,
    pub seed: u64,
    #[serde(default)]
    pub extra_hidden_layers: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            eta: 0.002,
            iters: 100,
            hidden: 10,
            seed: 0,
            extra_hidden_layers: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::param(format!("learning rate must be finite and >= 0, got {}", self.eta)));
        }
        if self.iters == 0 {
            return Err(Error::param("iteration count must be at least 1"));
        }
        if self.hidden == 0 {
            return Err(Error::param("hidden width must be at least 1"));
        }
        Ok(())
    }
}

pub fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// Activations of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardPass {
    /// Last hidden layer, m x h.
    pub hidden: Array2<f64>,
    /// Network output, m x d.
    pub output: Array2<f64>,
}

struct Trace {
    /// `P * a_l` for each layer input `a_l`.
    propagated: Vec<Array2<f64>>,
    /// `sigma(...)` output of each layer.
    activations: Vec<Array2<f64>>,
}

fn check_input(model: &GnnModel, x: ArrayView2<f64>, p: &PropagationMatrix) -> Result<()> {
    if x.ncols() != model.features() {
        return Err(Error::shape(format!(
            "input has {} columns, model expects {}",
            x.ncols(),
            model.features()
        )));
    }
    p.check_rows(x.nrows(), "input")
}

fn trace(model: &GnnModel, x: ArrayView2<f64>, p: &PropagationMatrix) -> Trace {
    let n = model.extra_hidden.len() + 2;
    let mut propagated = Vec::with_capacity(n);
    let mut activations: Vec<Array2<f64>> = Vec::with_capacity(n);
    for layer in model.layers() {
        let input = activations.last().map(|a| a.view()).unwrap_or(x);
        let mixed = p.apply(input);
        let mut pre = mixed.dot(&layer.weights);
        pre += &layer.bias;
        pre.mapv_inplace(sigmoid);
        propagated.push(mixed);
        activations.push(pre);
    }
    Trace {
        propagated,
        activations,
    }
}

pub fn forward(model: &GnnModel, x: ArrayView2<f64>, p: &PropagationMatrix) -> Result<ForwardPass> {
    check_input(model, x, p)?;
    let mut t = trace(model, x, p);
    let output = t.activations.pop().expect("at least two layers");
    let hidden = t.activations.pop().expect("at least two layers");
    Ok(ForwardPass { hidden, output })
}

/// Two-hop aggregate `P * P * X` the network learns to reproduce.
pub fn reconstruction_target(x: ArrayView2<f64>, p: &PropagationMatrix) -> Result<Array2<f64>> {
    p.check_rows(x.nrows(), "input")?;
    let once = p.apply(x);
    Ok(p.apply(once.view()))
}

/// Gradients, one `(dW, db)` per layer in network order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<(Array2<f64>, Array1<f64>)>,
}

fn half_squared_error(target: ArrayView2<f64>, output: ArrayView2<f64>) -> f64 {
    target
        .iter()
        .zip(output.iter())
        .map(|(t, z)| (t - z) * (t - z))
        .sum::<f64>()
        * 0.5
}

fn backprop(
    model: &GnnModel,
    x: ArrayView2<f64>,
    p: &PropagationMatrix,
    target: ArrayView2<f64>,
) -> (f64, Array2<f64>, Gradients) {
    let t = trace(model, x, p);
    let output = t.activations.last().expect("output layer");
    let loss = half_squared_error(target, output.view());

    let layers: Vec<&Layer> = model.layers().collect();
    let mut grads = Vec::with_capacity(layers.len());
    // dJ/dZ
    let mut upstream = output - &target;
    for l in (0..layers.len()).rev() {
        let act = &t.activations[l];
        let delta = &upstream * &act.mapv(|a| a * (1.0 - a));
        let dw = t.propagated[l].t().dot(&delta);
        let db = delta.sum_axis(Axis(0));
        if l > 0 {
            let d_mixed = delta.dot(&layers[l].weights.t());
            upstream = p.apply_transpose(d_mixed.view());
        }
        grads.push((dw, db));
    }
    grads.reverse();
    (
        loss,
        t.activations.into_iter().last().expect("output layer"),
        Gradients { layers: grads },
    )
}

/// Loss `J` against `X' = P P X` and its gradient.
pub fn loss_and_gradients(
    model: &GnnModel,
    x: ArrayView2<f64>,
    p: &PropagationMatrix,
) -> Result<(f64, Gradients)> {
    check_input(model, x, p)?;
    let target = reconstruction_target(x, p)?;
    let (loss, _, grads) = backprop(model, x, p, target.view());
    Ok((loss, grads))
}

/// Full-batch gradient descent towards an explicit target. Returns the final
/// model and the loss before each update.
pub fn train_towards(
    x: ArrayView2<f64>,
    p: &PropagationMatrix,
    target: ArrayView2<f64>,
    cfg: &TrainConfig,
) -> Result<(GnnModel, Vec<f64>)> {
    cfg.validate()?;
    if target.dim() != x.dim() {
        return Err(Error::shape(format!(
            "target is {:?}, input is {:?}",
            target.dim(),
            x.dim()
        )));
    }
    let mut model = init_model(x.ncols(), cfg.hidden, cfg.extra_hidden_layers, cfg.seed)?;
    check_input(&model, x, p)?;
    let mut history = Vec::with_capacity(cfg.iters);
    for iteration in 0..cfg.iters {
        let (loss, _, grads) = backprop(&model, x, p, target);
        if !loss.is_finite() {
            return Err(Error::Diverged { iteration, loss });
        }
        history.push(loss);
        for (layer, (dw, db)) in model.layers_mut().zip(&grads.layers) {
            layer.weights.scaled_add(-cfg.eta, dw);
            layer.bias.scaled_add(-cfg.eta, db);
        }
    }
    if !model.layers().all(Layer::is_finite) {
        return Err(Error::Diverged {
            iteration: cfg.iters,
            loss: f64::NAN,
        });
    }
    Ok((model, history))
}

pub fn train(x: ArrayView2<f64>, p: &PropagationMatrix, cfg: &TrainConfig) -> Result<(GnnModel, Vec<f64>)> {
    let target = reconstruction_target(x, p)?;
    train_towards(x, p, target.view(), cfg)
}

/// Trains towards `target`, scores every object and flags the top `n`.
pub fn fit_and_score(
    x: ArrayView2<f64>,
    p: &PropagationMatrix,
    target: ArrayView2<f64>,
    cfg: &TrainConfig,
    n: usize,
) -> Result<(GnnModel, DetectionReport)> {
    if n > x.nrows() {
        return Err(Error::param(format!("n = {n} exceeds the {} objects", x.nrows())));
    }
    let (model, loss_history) = train_towards(x, p, target, cfg)?;
    let pass = forward(&model, x, p)?;
    let ff = fault_factors(target, pass.output.view())?;
    let ranking = ranking(&ff);
    let flagged = ranking[..n].to_vec();
    Ok((
        model,
        DetectionReport {
            ff,
            ranking,
            flagged,
            n,
            loss_history,
        },
    ))
}

/// The full detector: build `X' = P P X`, train, score and flag the top `n`.
pub fn detect(
    x: ArrayView2<f64>,
    p: &PropagationMatrix,
    cfg: &TrainConfig,
    n: usize,
) -> Result<(GnnModel, DetectionReport)> {
    let target = reconstruction_target(x, p)?;
    fit_and_score(x, p, target.view(), cfg, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn zero_model(d: usize, h: usize) -> GnnModel {
        GnnModel {
            input: Layer::zeros(d, h),
            extra_hidden: Vec::new(),
            output: Layer::zeros(h, d),
        }
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let a = init_model(23, 10, 0, 9).unwrap();
        let b = init_model(23, 10, 0, 9).unwrap();
        assert_eq!(a, b);
        let bound = (6.0_f64 / 33.0).sqrt();
        assert!(a.input.weights.iter().all(|w| w.abs() <= bound));
        assert!(a.input.bias.iter().chain(a.output.bias.iter()).all(|&v| v == 0.0));
        assert_ne!(a, init_model(23, 10, 0, 10).unwrap());
        a.validate().unwrap();
    }

    #[test]
    fn zero_model_outputs_one_half() {
        let x = array![[0.2, 0.9], [0.4, 0.1], [1.0, 0.0]];
        let p = PropagationMatrix::identity(3);
        let pass = forward(&zero_model(2, 3), x.view(), &p).unwrap();
        assert!(pass.hidden.iter().chain(pass.output.iter()).all(|&v| v == 0.5));
        assert_eq!(pass.hidden.dim(), (3, 3));
        assert_eq!(pass.output.dim(), (3, 2));
    }

    #[test]
    fn two_object_hand_computation() {
        // objects point at each other (k = 1), one feature, one hidden unit
        let p = PropagationMatrix::from_dense(array![[1.0, 1.0], [1.0, 1.0]]).unwrap();
        let x = array![[0.2], [0.6]];
        let model = GnnModel {
            input: Layer {
                weights: array![[0.5]],
                bias: array![0.1],
            },
            extra_hidden: Vec::new(),
            output: Layer {
                weights: array![[-1.5]],
                bias: array![0.3],
            },
        };
        // P X = [0.8, 0.8]; hidden = sigma(0.8 * 0.5 + 0.1) = sigma(0.5)
        let h = 1.0 / (1.0 + (-0.5_f64).exp());
        // P H = 2h; output = sigma(2h * -1.5 + 0.3)
        let z = 1.0 / (1.0 + (-(2.0 * h * -1.5 + 0.3)).exp());
        let pass = forward(&model, x.view(), &p).unwrap();
        for v in pass.hidden.iter() {
            assert!((v - h).abs() < 1e-12);
        }
        for v in pass.output.iter() {
            assert!((v - z).abs() < 1e-12);
        }
    }

    #[test]
    fn forward_rejects_bad_shapes() {
        let x = array![[0.2, 0.9], [0.4, 0.1]];
        assert!(forward(&zero_model(3, 2), x.view(), &PropagationMatrix::identity(2)).is_err());
        assert!(forward(&zero_model(2, 2), x.view(), &PropagationMatrix::identity(3)).is_err());
    }

    #[test]
    fn isolated_objects_quadruple() {
        let x = array![[0.5, -1.0], [2.0, 3.0]];
        let p = PropagationMatrix::from_dense(Array2::eye(2) * 2.0).unwrap();
        assert_eq!(reconstruction_target(x.view(), &p).unwrap(), x * 4.0);
    }

    #[test]
    fn two_hop_target_on_three_points() {
        // P from the 1-D points {0, 1, 3} with k = 1
        let p = PropagationMatrix::from_dense(array![
            [1.0, 1.0, 0.0],
            [1.0, 1.0, 0.0],
            [0.0, 1.0, 1.0]
        ])
        .unwrap();
        let x = array![[1.0, 0.0], [0.0, 2.0], [5.0, 1.0]];
        // P P = [[2,2,0],[2,2,0],[1,2,1]]
        let expected = array![[2.0, 4.0], [2.0, 4.0], [6.0, 5.0]];
        assert_eq!(reconstruction_target(x.view(), &p).unwrap(), expected);
    }

    #[test]
    fn zero_loss_at_exact_reconstruction() {
        // a zero model outputs 0.5 everywhere; with P = I the target is X
        let x = Array2::from_elem((4, 3), 0.5);
        let p = PropagationMatrix::identity(4);
        let (loss, grads) = loss_and_gradients(&zero_model(3, 2), x.view(), &p).unwrap();
        assert_eq!(loss, 0.0);
        for (dw, db) in &grads.layers {
            assert!(dw.iter().chain(db.iter()).all(|&g| g == 0.0));
        }
    }

    #[test]
    fn zero_learning_rate_keeps_init() {
        let x = array![[0.1, 0.2], [0.3, 0.9], [0.7, 0.4]];
        let p = PropagationMatrix::identity(3);
        let cfg = TrainConfig {
            eta: 0.0,
            iters: 5,
            hidden: 2,
            seed: 4,
            extra_hidden_layers: 0,
        };
        let (model, history) = train(x.view(), &p, &cfg).unwrap();
        assert_eq!(model, init_model(2, 2, 0, 4).unwrap());
        assert!(history.windows(2).all(|w| w[0] == w[1]));
        assert_eq!(history.len(), 5);
    }

    #[test]
    fn divergence_reports_iteration() {
        // squared errors of order 1e400 overflow the loss
        let x = array![[1e200, 0.2], [0.3, 0.9], [0.7, -1e200]];
        let p = PropagationMatrix::identity(3);
        let cfg = TrainConfig {
            iters: 10,
            hidden: 2,
            ..TrainConfig::default()
        };
        match train(x.view(), &p, &cfg) {
            Err(Error::Diverged { iteration, loss }) => {
                assert_eq!(iteration, 0);
                assert!(!loss.is_finite());
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn extra_layers_change_depth_only() {
        let m = init_model(5, 3, 2, 0).unwrap();
        assert_eq!(m.layers().count(), 4);
        m.validate().unwrap();
        let x = Array2::from_elem((4, 5), 0.25);
        let pass = forward(&m, x.view(), &PropagationMatrix::identity(4)).unwrap();
        assert_eq!(pass.hidden.dim(), (4, 3));
        assert_eq!(pass.output.dim(), (4, 5));
    }
}
