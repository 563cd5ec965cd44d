//! Fully connected ReLU network trained with Adam.
//!
//! The output head is either identity (regression, MSE loss) or softmax
//! (classification, cross-entropy loss). Everything is `f64` so that finite
//! difference checks are meaningful.

mod checkpoint;

use ndarray::{s, Array1, Array2, ArrayView2, Axis, Zip};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::difficulty::ClassPrediction;
use crate::error::{Error, Result};

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;
pub const DEFAULT_BATCH_SIZE: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Head {
    Identity,
    Softmax { classes: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    Mse,
    CrossEntropy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub input_dim: usize,
    pub hidden_sizes: Vec<usize>,
    pub head: Head,
    pub loss: Loss,
    pub seed: u64,
}

impl NetworkConfig {
    /// Two 1024-unit hidden layers.
    pub const DEFAULT_HIDDEN: [usize; 2] = [1024, 1024];

    pub fn regression(input_dim: usize, hidden_sizes: Vec<usize>, seed: u64) -> Self {
        NetworkConfig {
            input_dim,
            hidden_sizes,
            head: Head::Identity,
            loss: Loss::Mse,
            seed,
        }
    }

    pub fn classifier(input_dim: usize, hidden_sizes: Vec<usize>, classes: usize, seed: u64) -> Self {
        NetworkConfig {
            input_dim,
            hidden_sizes,
            head: Head::Softmax { classes },
            loss: Loss::CrossEntropy,
            seed,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        NetworkConfig { seed, ..self.clone() }
    }

    pub fn output_dim(&self) -> usize {
        match self.head {
            Head::Identity => 1,
            Head::Softmax { classes } => classes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::config("input_dim must be positive"));
        }
        if self.hidden_sizes.is_empty() || self.hidden_sizes.contains(&0) {
            return Err(Error::config("hidden_sizes must be non-empty and positive"));
        }
        match (self.head, self.loss) {
            (Head::Identity, Loss::Mse) => Ok(()),
            (Head::Softmax { classes }, Loss::CrossEntropy) if classes >= 2 => Ok(()),
            (Head::Softmax { .. }, Loss::CrossEntropy) => Err(Error::config("softmax head needs at least 2 classes")),
            _ => Err(Error::config(
                "identity head pairs with mse, softmax with cross_entropy",
            )),
        }
    }

    fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden_sizes.len() + 1);
        let mut fan_in = self.input_dim;
        for &h in self.hidden_sizes.iter().chain(std::iter::once(&self.output_dim())) {
            dims.push((fan_in, h));
            fan_in = h;
        }
        dims
    }
}

/// Weights (`fan_in × fan_out`) and bias of one dense layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Layer {
    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Layer {
            weights: Array2::zeros((fan_in, fan_out)),
            bias: Array1::zeros(fan_out),
        }
    }

    fn values(&self) -> impl Iterator<Item = &f64> {
        self.weights.iter().chain(self.bias.iter())
    }
}

/// Parameter-shaped gradient, one [`Layer`] per network layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

impl Gradients {
    pub fn values(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(Layer::values)
    }
}

/// Training targets for a batch.
#[derive(Debug, Clone, Copy)]
pub enum Targets<'a> {
    Values(&'a [f64]),
    Classes(&'a [usize]),
}

impl Targets<'_> {
    pub fn len(&self) -> usize {
        match self {
            Targets::Values(v) => v.len(),
            Targets::Classes(c) => c.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    config: NetworkConfig,
    pub layers: Vec<Layer>,
    first_moment: Vec<Layer>,
    second_moment: Vec<Layer>,
    step: u64,
}

/// Activations kept from the forward pass for backpropagation.
struct Trace {
    /// Input to each layer (the batch, then post-ReLU hidden outputs).
    inputs: Vec<Array2<f64>>,
    logits: Array2<f64>,
}

impl NetworkState {
    /// Glorot-uniform weights, zero biases and moments.
    pub fn new(config: NetworkConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut layers = Vec::new();
        for (fan_in, fan_out) in config.layer_dims() {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let dist = Uniform::new_inclusive(-limit, limit).expect("finite limit");
            let weights = Array2::from_shape_simple_fn((fan_in, fan_out), || dist.sample(&mut rng));
            layers.push(Layer {
                weights,
                bias: Array1::zeros(fan_out),
            });
        }
        let zeros: Vec<Layer> = config
            .layer_dims()
            .into_iter()
            .map(|(i, o)| Layer::zeros(i, o))
            .collect();
        Ok(NetworkState {
            config,
            layers,
            first_moment: zeros.clone(),
            second_moment: zeros,
            step: 0,
        })
    }

    /// Rebuilds a state from stored parameters; moments start at zero.
    pub fn from_parts(config: NetworkConfig, layers: Vec<Layer>, step: u64) -> Result<Self> {
        config.validate()?;
        let dims = config.layer_dims();
        if dims.len() != layers.len()
            || dims
                .iter()
                .zip(&layers)
                .any(|(&(i, o), l)| l.weights.dim() != (i, o) || l.bias.len() != o)
        {
            return Err(Error::shape("layer shapes do not match the configuration"));
        }
        let zeros: Vec<Layer> = dims.into_iter().map(|(i, o)| Layer::zeros(i, o)).collect();
        Ok(NetworkState {
            config,
            layers,
            first_moment: zeros.clone(),
            second_moment: zeros,
            step,
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn parameters(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(Layer::values)
    }

    fn check_batch(&self, batch: &ArrayView2<f64>) -> Result<()> {
        if batch.ncols() != self.config.input_dim {
            return Err(Error::shape(format!(
                "batch width {} but network expects {}",
                batch.ncols(),
                self.config.input_dim
            )));
        }
        Ok(())
    }

    fn forward_trace(&self, batch: ArrayView2<f64>) -> Trace {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut current = batch.to_owned();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = current.dot(&layer.weights);
            z += &layer.bias;
            inputs.push(current);
            if l == last {
                return Trace { inputs, logits: z };
            }
            z.mapv_inplace(|v| v.max(0.0));
            current = z;
        }
        unreachable!("network has at least one layer")
    }

    /// Network output: raw values (identity head) or class probabilities.
    pub fn forward(&self, batch: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_batch(&batch)?;
        let mut out = self.forward_trace(batch).logits;
        if let Head::Softmax { .. } = self.config.head {
            softmax_rows(&mut out);
        }
        Ok(out)
    }

    pub fn predict_values(&self, batch: ArrayView2<f64>) -> Result<Vec<f64>> {
        Ok(self.forward(batch)?.column(0).to_vec())
    }

    /// Arg-max class and its probability per row.
    pub fn predict_classes(&self, batch: ArrayView2<f64>) -> Result<Vec<ClassPrediction>> {
        let probs = self.forward(batch)?;
        Ok(probs
            .rows()
            .into_iter()
            .map(|row| {
                let mut best = 0;
                for (c, &p) in row.iter().enumerate() {
                    if p > row[best] {
                        best = c;
                    }
                }
                ClassPrediction {
                    class: best,
                    confidence: row[best],
                }
            })
            .collect())
    }

    /// Batch-averaged loss and its gradient by backpropagation.
    pub fn loss_and_gradient(&self, batch: ArrayView2<f64>, targets: Targets<'_>) -> Result<(f64, Gradients)> {
        self.check_batch(&batch)?;
        let n = batch.nrows();
        if targets.len() != n {
            return Err(Error::shape(format!("{} targets for {n} rows", targets.len())));
        }
        if n == 0 {
            return Err(Error::Empty("batch".into()));
        }
        let trace = self.forward_trace(batch);
        let (loss, mut delta) = output_delta(&self.config, &trace.logits, targets)?;

        let mut grads: Vec<Layer> = Vec::with_capacity(self.layers.len());
        for l in (0..self.layers.len()).rev() {
            let input = &trace.inputs[l];
            let gw = input.t().dot(&delta);
            let gb = delta.sum_axis(Axis(0));
            if l > 0 {
                let mut back = delta.dot(&self.layers[l].weights.t());
                // ReLU derivative from the stored post-activation
                Zip::from(&mut back).and(input).for_each(|d, &a| {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                });
                delta = back;
            }
            grads.push(Layer { weights: gw, bias: gb });
        }
        grads.reverse();
        Ok((loss, Gradients { layers: grads }))
    }

    /// Mean loss over a batch without computing gradients.
    pub fn loss(&self, batch: ArrayView2<f64>, targets: Targets<'_>) -> Result<f64> {
        self.check_batch(&batch)?;
        let logits = self.forward_trace(batch).logits;
        Ok(output_delta(&self.config, &logits, targets)?.0)
    }

    /// Adam update with bias correction.
    pub fn adam_step(&mut self, grads: &Gradients, lr: f64) -> Result<()> {
        if !(lr > 0.0) {
            return Err(Error::config(format!("learning rate must be positive, got {lr}")));
        }
        if grads.layers.len() != self.layers.len() {
            return Err(Error::shape("gradient layer count mismatch"));
        }
        if grads.values().any(|g| !g.is_finite()) {
            return Err(Error::Numerical("non-finite gradient".into()));
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - ADAM_BETA1.powi(t);
        let c2 = 1.0 - ADAM_BETA2.powi(t);
        let update = |p: &mut f64, m: &mut f64, v: &mut f64, &g: &f64| {
            *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
            *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
        };
        for (((layer, m), v), g) in self
            .layers
            .iter_mut()
            .zip(self.first_moment.iter_mut())
            .zip(self.second_moment.iter_mut())
            .zip(&grads.layers)
        {
            Zip::from(&mut layer.weights)
                .and(&mut m.weights)
                .and(&mut v.weights)
                .and(&g.weights)
                .for_each(update);
            Zip::from(&mut layer.bias)
                .and(&mut m.bias)
                .and(&mut v.bias)
                .and(&g.bias)
                .for_each(update);
        }
        if self.parameters().any(|p| !p.is_finite()) {
            return Err(Error::Numerical("parameters diverged".into()));
        }
        Ok(())
    }

    /// Mini-batch Adam for `epochs` passes over all rows of `features`.
    ///
    /// Row order is reshuffled every epoch from `order_seed`. Returns the
    /// mean training loss of each epoch.
    pub fn train_epochs(
        &mut self,
        features: ArrayView2<f64>,
        targets: Targets<'_>,
        order_seed: u64,
        epochs: usize,
        lr: f64,
        batch_size: usize,
    ) -> Result<Vec<f64>> {
        let n = features.nrows();
        if n == 0 {
            return Err(Error::Empty("training pool".into()));
        }
        if targets.len() != n {
            return Err(Error::shape(format!("{} targets for {n} rows", targets.len())));
        }
        if batch_size == 0 {
            return Err(Error::config("batch_size must be positive"));
        }
        self.check_batch(&features)?;
        let mut rng = ChaCha8Rng::seed_from_u64(order_seed);
        let mut order: Vec<usize> = (0..n).collect();
        let mut losses = Vec::with_capacity(epochs);
        let mut batch = Array2::zeros((batch_size.min(n), features.ncols()));
        let mut values = Vec::with_capacity(batch_size);
        let mut classes = Vec::with_capacity(batch_size);
        for _ in 0..epochs {
            order.shuffle(&mut rng);
            let mut total = 0.0;
            for chunk in order.chunks(batch_size) {
                let rows = chunk.len();
                for (r, &src) in chunk.iter().enumerate() {
                    batch.row_mut(r).assign(&features.row(src));
                }
                let view = batch.slice(s![..rows, ..]);
                let batch_targets = match targets {
                    Targets::Values(v) => {
                        values.clear();
                        values.extend(chunk.iter().map(|&i| v[i]));
                        Targets::Values(&values)
                    }
                    Targets::Classes(c) => {
                        classes.clear();
                        classes.extend(chunk.iter().map(|&i| c[i]));
                        Targets::Classes(&classes)
                    }
                };
                let (loss, grads) = self.loss_and_gradient(view, batch_targets)?;
                self.adam_step(&grads, lr)?;
                total += loss * rows as f64;
            }
            losses.push(total / n as f64);
        }
        Ok(losses)
    }
}

/// Loss value and ∂loss/∂logits for the configured head.
fn output_delta(config: &NetworkConfig, logits: &Array2<f64>, targets: Targets<'_>) -> Result<(f64, Array2<f64>)> {
    let n = logits.nrows();
    if targets.len() != n {
        return Err(Error::shape(format!("{} targets for {n} rows", targets.len())));
    }
    let scale = 1.0 / n as f64;
    match (config.head, targets) {
        (Head::Identity, Targets::Values(y)) => {
            let mut delta = logits.clone();
            let mut loss = 0.0;
            for (r, &t) in y.iter().enumerate() {
                let resid = logits[[r, 0]] - t;
                loss += resid * resid;
                delta[[r, 0]] = 2.0 * resid * scale;
            }
            Ok((loss * scale, delta))
        }
        (Head::Softmax { classes }, Targets::Classes(y)) => {
            let mut probs = logits.clone();
            let mut loss = 0.0;
            for (r, &t) in y.iter().enumerate() {
                if t >= classes {
                    return Err(Error::shape(format!("class index {t} outside 0..{classes}")));
                }
                let row = logits.row(r);
                let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
                loss += lse - row[t];
            }
            softmax_rows(&mut probs);
            for (r, &t) in y.iter().enumerate() {
                probs[[r, t]] -= 1.0;
            }
            probs.mapv_inplace(|v| v * scale);
            Ok((loss * scale, probs))
        }
        _ => Err(Error::shape("targets do not match the network head")),
    }
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(m: &mut Array2<f64>) {
    for mut row in m.rows_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn zeroed(cfg: NetworkConfig) -> NetworkState {
        let mut state = NetworkState::new(cfg).unwrap();
        for l in &mut state.layers {
            l.weights.fill(0.0);
        }
        state
    }

    #[test]
    fn init_is_deterministic_with_zero_bias() {
        let cfg = NetworkConfig::classifier(3, vec![4], 2, 9);
        let a = NetworkState::new(cfg.clone()).unwrap();
        let b = NetworkState::new(cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.layers.iter().all(|l| l.bias.iter().all(|&v| v == 0.0)));
        assert_eq!(a.parameter_count(), 26);
        let limit = (6.0f64 / 7.0).sqrt();
        assert!(a.layers[0].weights.iter().all(|w| w.abs() <= limit));
    }

    #[test]
    fn invalid_configs() {
        assert!(NetworkState::new(NetworkConfig::regression(0, vec![4], 0)).is_err());
        assert!(NetworkState::new(NetworkConfig::regression(3, vec![], 0)).is_err());
        let mut mixed = NetworkConfig::regression(3, vec![2], 0);
        mixed.loss = Loss::CrossEntropy;
        assert!(NetworkState::new(mixed).is_err());
    }

    #[test]
    fn zero_weights_give_uniform_softmax_and_zero_regression() {
        let x = array![[1.0, -2.0], [0.5, 3.0]];
        let probs = zeroed(NetworkConfig::classifier(2, vec![3], 3, 1))
            .forward(x.view())
            .unwrap();
        assert!(probs.iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-15));
        let out = zeroed(NetworkConfig::regression(2, vec![3], 1))
            .forward(x.view())
            .unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn batch_forward_equals_row_forwards() {
        let net = NetworkState::new(NetworkConfig::classifier(3, vec![5, 4], 3, 7)).unwrap();
        let x = array![[0.3, -1.0, 2.0], [1.5, 0.2, -0.7]];
        let both = net.forward(x.view()).unwrap();
        for r in 0..2 {
            let single = net.forward(x.slice(s![r..r + 1, ..])).unwrap();
            for c in 0..3 {
                assert!((single[[0, c]] - both[[r, c]]).abs() < 1e-15);
            }
            assert!((both.row(r).sum() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn width_mismatch_is_an_error() {
        let net = NetworkState::new(NetworkConfig::regression(3, vec![2], 0)).unwrap();
        assert!(matches!(net.forward(array![[1.0, 2.0]].view()), Err(Error::Shape(_))));
    }

    #[test]
    fn softmax_handles_extreme_logits() {
        let mut m = array![[1000.0, -1000.0, 0.0], [-745.0, -745.0, -745.0]];
        softmax_rows(&mut m);
        for row in m.rows() {
            assert!((row.sum() - 1.0).abs() < 1e-12);
            assert!(row.iter().all(|p| p.is_finite()));
        }
    }

    #[test]
    fn uniform_output_cross_entropy_is_ln2() {
        let net = zeroed(NetworkConfig::classifier(2, vec![3], 2, 0));
        let loss = net.loss(array![[0.2, 0.4]].view(), Targets::Classes(&[0])).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn perfect_regression_has_zero_output_residual() {
        let net = zeroed(NetworkConfig::regression(2, vec![3], 0));
        let (loss, grads) = net
            .loss_and_gradient(array![[1.0, 2.0]].view(), Targets::Values(&[0.0]))
            .unwrap();
        assert_eq!(loss, 0.0);
        assert!(grads.values().all(|&g| g == 0.0));
    }

    #[test]
    fn invalid_class_index() {
        let net = NetworkState::new(NetworkConfig::classifier(2, vec![3], 2, 0)).unwrap();
        assert!(net.loss(array![[0.0, 0.0]].view(), Targets::Classes(&[2])).is_err());
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut net = NetworkState::new(NetworkConfig::regression(2, vec![3], 4)).unwrap();
        let before = net.layers.clone();
        let zero = Gradients {
            layers: before
                .iter()
                .map(|l| Layer::zeros(l.weights.nrows(), l.weights.ncols()))
                .collect(),
        };
        net.adam_step(&zero, 0.01).unwrap();
        assert_eq!(net.layers, before);
        assert_eq!(net.step(), 1);
    }

    #[test]
    fn first_adam_step_moves_by_lr_times_sign() {
        let mut net = NetworkState::new(NetworkConfig::regression(1, vec![1], 4)).unwrap();
        let before = net.layers.clone();
        let mut grads = Gradients {
            layers: before
                .iter()
                .map(|l| Layer::zeros(l.weights.nrows(), l.weights.ncols()))
                .collect(),
        };
        grads.layers[0].weights[[0, 0]] = 0.37;
        grads.layers[1].bias[0] = -2.5;
        let lr = 0.01;
        net.adam_step(&grads, lr).unwrap();
        // m̂ = g, v̂ = g², so the step is lr·g/(|g| + ε)
        let expect_w = before[0].weights[[0, 0]] - lr * 0.37 / (0.37 + ADAM_EPSILON);
        let expect_b = before[1].bias[0] + lr * 2.5 / (2.5 + ADAM_EPSILON);
        assert!((net.layers[0].weights[[0, 0]] - expect_w).abs() < 1e-15);
        assert!((net.layers[1].bias[0] - expect_b).abs() < 1e-15);
        assert!((net.layers[0].weights[[0, 0]] - before[0].weights[[0, 0]] + lr).abs() < 1e-9);
    }

    #[test]
    fn adam_rejects_non_finite_gradient_and_bad_lr() {
        let mut net = NetworkState::new(NetworkConfig::regression(1, vec![1], 4)).unwrap();
        let mut grads = Gradients {
            layers: net
                .layers
                .iter()
                .map(|l| Layer::zeros(l.weights.nrows(), l.weights.ncols()))
                .collect(),
        };
        assert!(net.adam_step(&grads, 0.0).is_err());
        grads.layers[0].bias[0] = f64::NAN;
        assert!(matches!(net.adam_step(&grads, 0.1), Err(Error::Numerical(_))));
    }

    #[test]
    fn zero_epochs_is_a_no_op() {
        let mut net = NetworkState::new(NetworkConfig::regression(2, vec![3], 4)).unwrap();
        let before = net.clone();
        let trace = net
            .train_epochs(array![[1.0, 2.0]].view(), Targets::Values(&[1.0]), 0, 0, 0.1, 8)
            .unwrap();
        assert!(trace.is_empty());
        assert_eq!(net, before);
    }

    #[test]
    fn empty_pool_is_an_error() {
        let mut net = NetworkState::new(NetworkConfig::regression(2, vec![3], 4)).unwrap();
        let x = Array2::<f64>::zeros((0, 2));
        assert!(net.train_epochs(x.view(), Targets::Values(&[]), 0, 1, 0.1, 8).is_err());
    }
}
