use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_labels, LearnerError};
use crate::seed;
use crate::stats::{argmax, softmax_in_place};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
}

impl Default for MlpParams {
    fn default() -> Self {
        Self {
            hidden: vec![64],
            epochs: 200,
            batch_size: 32,
            learning_rate: 0.01,
            momentum: 0.9,
        }
    }
}

impl MlpParams {
    pub fn train_options(&self) -> TrainOptions {
        TrainOptions {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            momentum: self.momentum,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
}

/// Dense layer computing `a · weights + biases`; weights are `fan_in × fan_out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Array2<f64>,
    pub biases: Array1<f64>,
}

/// ReLU hidden layers and a softmax output. Persisted as the layer sizes plus
/// one flat parameter array (per layer: weights row-major, then biases).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "MlpRepr", try_from = "MlpRepr")]
pub struct MlpModel {
    pub layer_sizes: Vec<usize>,
    pub layers: Vec<Layer>,
}

#[derive(Serialize, Deserialize)]
struct MlpRepr {
    layer_sizes: Vec<usize>,
    activation: String,
    output: String,
    parameters: Vec<f64>,
}

impl From<MlpModel> for MlpRepr {
    fn from(m: MlpModel) -> Self {
        MlpRepr {
            parameters: m.parameters(),
            layer_sizes: m.layer_sizes,
            activation: "relu".into(),
            output: "softmax".into(),
        }
    }
}

impl TryFrom<MlpRepr> for MlpModel {
    type Error = String;

    fn try_from(r: MlpRepr) -> Result<Self, Self::Error> {
        if r.activation != "relu" || r.output != "softmax" {
            return Err(format!("unsupported activation/output {}/{}", r.activation, r.output));
        }
        let mut m = init_mlp(&r.layer_sizes, 0).map_err(|e| e.to_string())?;
        if r.parameters.len() != m.n_parameters() {
            return Err(format!(
                "expected {} parameters, found {}",
                m.n_parameters(),
                r.parameters.len()
            ));
        }
        m.set_parameters(&r.parameters);
        Ok(m)
    }
}

/// Uniform(−√(6/fan_in), √(6/fan_in)) weights, zero biases.
pub fn init_mlp(layer_sizes: &[usize], seed: u64) -> Result<MlpModel, LearnerError> {
    if layer_sizes.len() < 3 {
        return Err(LearnerError::Architecture(
            "need input, at least one hidden layer, and output".into(),
        ));
    }
    if layer_sizes.contains(&0) {
        return Err(LearnerError::Architecture(format!("zero-width layer in {layer_sizes:?}")));
    }
    let mut rng = seed::rng(seed);
    let layers = layer_sizes
        .windows(2)
        .map(|w| {
            let limit = (6.0 / w[0] as f64).sqrt();
            Layer {
                weights: Array2::from_shape_simple_fn((w[0], w[1]), || rng.random_range(-limit..=limit)),
                biases: Array1::zeros(w[1]),
            }
        })
        .collect();
    Ok(MlpModel {
        layer_sizes: layer_sizes.to_vec(),
        layers,
    })
}

struct Forward {
    /// Input followed by every layer's activation; the last is the softmax.
    activations: Vec<Array2<f64>>,
}

impl MlpModel {
    pub fn n_inputs(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn n_classes(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn n_parameters(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_parameters());
        for l in &self.layers {
            out.extend(l.weights.iter());
            out.extend(l.biases.iter());
        }
        out
    }

    pub fn set_parameters(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.n_parameters());
        let mut it = flat.iter();
        for l in &mut self.layers {
            l.weights.iter_mut().chain(l.biases.iter_mut()).for_each(|p| *p = *it.next().unwrap());
        }
    }

    fn forward(&self, x: ArrayView2<f64>) -> Forward {
        let mut activations = vec![x.to_owned()];
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = activations[i].dot(&layer.weights) + &layer.biases;
            if i == last {
                z.axis_iter_mut(Axis(0))
                    .for_each(|mut r| softmax_in_place(r.as_slice_mut().expect("standard layout")));
            } else {
                z.mapv_inplace(|v| v.max(0.0));
            }
            activations.push(z);
        }
        Forward { activations }
    }

    /// Mean cross-entropy of the batch.
    fn loss(&self, x: ArrayView2<f64>, y: &[usize]) -> f64 {
        let fwd = self.forward(x);
        let p = fwd.activations.last().unwrap();
        y.iter()
            .enumerate()
            .map(|(i, &l)| -(p[[i, l]].max(f64::MIN_POSITIVE)).ln())
            .sum::<f64>()
            / y.len() as f64
    }

    /// Backpropagated gradient of the mean cross-entropy, in the flat
    /// parameter order, together with the loss.
    fn gradients(&self, x: ArrayView2<f64>, y: &[usize]) -> (Vec<(Array2<f64>, Array1<f64>)>, f64) {
        let fwd = self.forward(x);
        let n = y.len() as f64;
        let p = fwd.activations.last().unwrap();
        let loss = y
            .iter()
            .enumerate()
            .map(|(i, &l)| -(p[[i, l]].max(f64::MIN_POSITIVE)).ln())
            .sum::<f64>()
            / n;
        let mut delta = p.clone();
        for (i, &l) in y.iter().enumerate() {
            delta[[i, l]] -= 1.0;
        }
        delta /= n;
        let mut grads = Vec::with_capacity(self.layers.len());
        for (li, layer) in self.layers.iter().enumerate().rev() {
            let input = &fwd.activations[li];
            let gw = input.t().dot(&delta);
            let gb = delta.sum_axis(Axis(0));
            if li > 0 {
                let mut back = delta.dot(&layer.weights.t());
                // ReLU derivative, taken as 0 at the kink
                back.zip_mut_with(input, |b, &a| {
                    if a <= 0.0 {
                        *b = 0.0
                    }
                });
                delta = back;
            }
            grads.push((gw, gb));
        }
        grads.reverse();
        (grads, loss)
    }
}

fn check_inputs(model: &MlpModel, x: &ArrayView2<f64>, y: &[usize]) -> Result<(), LearnerError> {
    if x.ncols() != model.n_inputs() {
        return Err(LearnerError::Dimension { expected: model.n_inputs(), found: x.ncols() });
    }
    check_labels(y, model.n_classes(), x.nrows())
}

/// Mini-batch SGD with momentum on softmax cross-entropy. Each epoch visits
/// the rows in a fresh seeded shuffle. Returns the trained model and the
/// mean batch loss of every epoch.
pub fn train_mlp(
    model: &MlpModel,
    x: ArrayView2<f64>,
    y: &[usize],
    opts: &TrainOptions,
    seed: u64,
) -> Result<(MlpModel, Vec<f64>), LearnerError> {
    let mut rng = seed::rng(seed);
    let n = x.nrows();
    train_mlp_scheduled(model, x, y, opts, |_| {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        order
    })
}

/// As [`train_mlp`], with the row visiting order of every epoch supplied by
/// `schedule(epoch)`.
pub fn train_mlp_scheduled(
    model: &MlpModel,
    x: ArrayView2<f64>,
    y: &[usize],
    opts: &TrainOptions,
    mut schedule: impl FnMut(usize) -> Vec<usize>,
) -> Result<(MlpModel, Vec<f64>), LearnerError> {
    check_inputs(model, &x, y)?;
    if opts.batch_size == 0 {
        return Err(LearnerError::Params("batch size must be >= 1".into()));
    }
    if !(opts.learning_rate >= 0.0) || !(0.0..1.0).contains(&opts.momentum) {
        return Err(LearnerError::Params(format!(
            "learning rate {} / momentum {} out of range",
            opts.learning_rate, opts.momentum
        )));
    }
    let mut model = model.clone();
    let mut velocity: Vec<(Array2<f64>, Array1<f64>)> = model
        .layers
        .iter()
        .map(|l| (Array2::zeros(l.weights.raw_dim()), Array1::zeros(l.biases.len())))
        .collect();
    let mut trace = Vec::with_capacity(opts.epochs);
    for epoch in 0..opts.epochs {
        let order = schedule(epoch);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for batch in order.chunks(opts.batch_size) {
            let bx = x.select(Axis(0), batch);
            let by: Vec<usize> = batch.iter().map(|&i| y[i]).collect();
            let (grads, loss) = model.gradients(bx.view(), &by);
            if loss.is_nan() {
                return Err(LearnerError::NanLoss { epoch: epoch + 1 });
            }
            loss_sum += loss;
            batches += 1;
            for ((layer, vel), (gw, gb)) in model.layers.iter_mut().zip(&mut velocity).zip(grads) {
                vel.0.zip_mut_with(&gw, |v, g| *v = opts.momentum * *v - opts.learning_rate * g);
                vel.1.zip_mut_with(&gb, |v, g| *v = opts.momentum * *v - opts.learning_rate * g);
                layer.weights += &vel.0;
                layer.biases += &vel.1;
            }
        }
        let epoch_loss = loss_sum / batches.max(1) as f64;
        if epoch_loss.is_nan() || model.layers.iter().any(|l| l.weights.iter().any(|w| w.is_nan())) {
            return Err(LearnerError::NanLoss { epoch: epoch + 1 });
        }
        trace.push(epoch_loss);
    }
    Ok((model, trace))
}

/// Largest relative disagreement between backpropagated gradients and
/// central finite differences (h = 1e−5) over every parameter:
/// `|g_bp − g_fd| / max(|g_bp| + |g_fd|, 1e−8)`. Meant for batches of at
/// most eight rows.
pub fn gradient_check(model: &MlpModel, x: ArrayView2<f64>, y: &[usize]) -> f64 {
    const H: f64 = 1e-5;
    let (grads, _) = model.gradients(x, y);
    let analytic: Vec<f64> = grads
        .iter()
        .flat_map(|(gw, gb)| gw.iter().chain(gb.iter()).copied().collect::<Vec<_>>())
        .collect();
    let base = model.parameters();
    let mut probe = model.clone();
    let mut theta = base.clone();
    let mut worst: f64 = 0.0;
    for i in 0..base.len() {
        theta[i] = base[i] + H;
        probe.set_parameters(&theta);
        let up = probe.loss(x, y);
        theta[i] = base[i] - H;
        probe.set_parameters(&theta);
        let down = probe.loss(x, y);
        theta[i] = base[i];
        let numeric = (up - down) / (2.0 * H);
        let rel = (analytic[i] - numeric).abs() / (analytic[i].abs() + numeric.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    worst
}

pub fn predict_mlp(model: &MlpModel, x: ArrayView2<f64>) -> Result<(Vec<usize>, Array2<f64>), LearnerError> {
    if x.ncols() != model.n_inputs() {
        return Err(LearnerError::Dimension { expected: model.n_inputs(), found: x.ncols() });
    }
    let p = model.forward(x).activations.pop().unwrap();
    let labels = p.outer_iter().map(|r| argmax(r.as_slice().unwrap())).collect();
    Ok((labels, p))
}
