//! Self-contained feed-forward network engine: forward pass, reverse-mode
//! gradients, Glorot initialization, Adam, analytic input Jacobians, and
//! serialization. No external ML framework.
//!
//! Conventions that make the gradient tests exact: hidden activations are
//! ReLU with subgradient 0 at 0; the output layer is identity; the MAE
//! subgradient at zero residual is 0. Losses are means over the batch.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::sampling::{ChannelView, Split};

/// Training loss. The convergence metric is always normalized MAE on the
/// validation split, independent of this choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    Mse,
    Mae,
}

/// Scalar-output multilayer perceptron. `layer_dims = [in, h1, ..., 1]`;
/// weight matrix l has shape (dims[l+1], dims[l]), row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    layer_dims: Vec<usize>,
    weights: Vec<Mat>,
    biases: Vec<Vec<f64>>,
}

impl MlpModel {
    /// Glorot-uniform initialization: each weight drawn from
    /// U[-a, a) with a = sqrt(6 / (fan_in + fan_out)); biases zero.
    /// Deterministic for a fixed seed.
    pub fn glorot_init(layer_dims: &[usize], seed: u64) -> Result<Self> {
        validate_dims(layer_dims)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::with_capacity(layer_dims.len() - 1);
        let mut biases = Vec::with_capacity(layer_dims.len() - 1);
        for l in 0..layer_dims.len() - 1 {
            let (fan_in, fan_out) = (layer_dims[l], layer_dims[l + 1]);
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let mut w = Mat::zeros(fan_out, fan_in);
            for v in w.as_mut_slice() {
                *v = rng.random_range(-a..a);
            }
            weights.push(w);
            biases.push(vec![0.0; fan_out]);
        }
        Ok(Self {
            layer_dims: layer_dims.to_vec(),
            weights,
            biases,
        })
    }

    /// Build directly from parameters (used by tests and by deserialization).
    pub fn from_parameters(
        layer_dims: Vec<usize>,
        weights: Vec<Mat>,
        biases: Vec<Vec<f64>>,
    ) -> Result<Self> {
        validate_dims(&layer_dims)?;
        if weights.len() != layer_dims.len() - 1 || biases.len() != layer_dims.len() - 1 {
            return Err(Error::Dimension {
                context: "layer count",
                expected: layer_dims.len() - 1,
                got: weights.len(),
            });
        }
        for l in 0..weights.len() {
            if weights[l].rows() != layer_dims[l + 1] || weights[l].cols() != layer_dims[l] {
                return Err(Error::Dimension {
                    context: "weight matrix shape",
                    expected: layer_dims[l + 1] * layer_dims[l],
                    got: weights[l].rows() * weights[l].cols(),
                });
            }
            if biases[l].len() != layer_dims[l + 1] {
                return Err(Error::Dimension {
                    context: "bias length",
                    expected: layer_dims[l + 1],
                    got: biases[l].len(),
                });
            }
            if weights[l].as_slice().iter().any(|v| !v.is_finite())
                || biases[l].iter().any(|v| !v.is_finite())
            {
                return Err(Error::Numerical("non-finite parameter".into()));
            }
        }
        Ok(Self {
            layer_dims,
            weights,
            biases,
        })
    }

    #[inline]
    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    #[inline]
    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[Mat] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    pub fn param_count(&self) -> usize {
        self.weights
            .iter()
            .map(|w| w.rows() * w.cols())
            .sum::<usize>()
            + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    /// Forward pass caching pre-activations and activations for backward.
    pub fn forward_cached(&self, x: &[f64], cache: &mut ForwardCache) -> Result<f64> {
        if x.len() != self.input_dim() {
            return Err(Error::Dimension {
                context: "forward input length",
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        cache.input.clear();
        cache.input.extend_from_slice(x);
        let last = self.num_layers() - 1;
        for l in 0..self.num_layers() {
            let (input, layer) = cache.io_at_layer(l);
            self.weights[l].matvec(input, &self.biases[l], &mut layer.z);
            if l < last {
                for (a, &z) in layer.act.iter_mut().zip(layer.z.iter()) {
                    *a = if z > 0.0 { z } else { 0.0 };
                }
            }
        }
        Ok(cache.layers[last].z[0])
    }

    /// Prediction without retaining caches beyond two ping-pong buffers.
    pub fn predict(&self, x: &[f64], scratch: &mut EvalScratch) -> Result<f64> {
        if x.len() != self.input_dim() {
            return Err(Error::Dimension {
                context: "predict input length",
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        let last = self.num_layers() - 1;
        scratch.a.clear();
        scratch.a.extend_from_slice(x);
        for l in 0..self.num_layers() {
            scratch.b.resize(self.layer_dims[l + 1], 0.0);
            self.weights[l].matvec(&scratch.a, &self.biases[l], &mut scratch.b);
            if l < last {
                for v in &mut scratch.b {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            std::mem::swap(&mut scratch.a, &mut scratch.b);
        }
        Ok(scratch.a[0])
    }

    /// Analytic gradient of the scalar output with respect to the input:
    /// the chain-rule product through the active ReLU pattern.
    pub fn input_jacobian(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut cache = ForwardCache::for_model(self);
        let mut out = vec![0.0; self.input_dim()];
        self.input_jacobian_into(x, &mut cache, &mut out)?;
        Ok(out)
    }

    /// No-allocation variant of [`Self::input_jacobian`].
    pub fn input_jacobian_into(
        &self,
        x: &[f64],
        cache: &mut ForwardCache,
        out: &mut [f64],
    ) -> Result<f64> {
        if out.len() != self.input_dim() {
            return Err(Error::Dimension {
                context: "input_jacobian output length",
                expected: self.input_dim(),
                got: out.len(),
            });
        }
        let y = self.forward_cached(x, cache)?;
        // delta starts as d out / d z_last = [1].
        cache.delta_b.clear();
        cache.delta_b.push(1.0);
        for l in (0..self.num_layers()).rev() {
            if l == 0 {
                self.weights[0].matvec_transpose(&cache.delta_b, out);
            } else {
                cache.delta_a.resize(self.layer_dims[l], 0.0);
                self.weights[l].matvec_transpose(&cache.delta_b, &mut cache.delta_a);
                for (d, &z) in cache.delta_a.iter_mut().zip(&cache.layers[l - 1].z) {
                    if z <= 0.0 {
                        *d = 0.0;
                    }
                }
                std::mem::swap(&mut cache.delta_a, &mut cache.delta_b);
            }
        }
        Ok(y)
    }

    /// Last hidden layer's activations from a populated cache. The output
    /// layer is linear in these, which the trainer exploits for its
    /// closed-form output refit.
    pub fn hidden_activations<'a>(&self, cache: &'a ForwardCache) -> &'a [f64] {
        debug_assert!(self.num_layers() >= 2, "no hidden layer");
        &cache.layers[self.num_layers() - 2].act
    }

    /// Serialize to JSON bytes; decimal encoding round-trips f64 exactly.
    pub fn save(&self) -> Vec<u8> {
        serde_json::to_vec(&ModelFile::from(self)).expect("model serialization cannot fail")
    }

    /// Inverse of [`Self::save`]; malformed input yields a parse error, never
    /// a partial model.
    pub fn load(bytes: &[u8]) -> Result<Self> {
        let file: ModelFile = serde_json::from_slice(bytes)?;
        file.into_model()
    }
}

fn validate_dims(layer_dims: &[usize]) -> Result<()> {
    if layer_dims.len() < 2 {
        return Err(Error::Config("need at least input and output layers".into()));
    }
    if layer_dims.iter().any(|&d| d == 0) {
        return Err(Error::Config("zero-width layer".into()));
    }
    if *layer_dims.last().unwrap() != 1 {
        return Err(Error::Config(format!(
            "output dimension must be 1, got {}",
            layer_dims.last().unwrap()
        )));
    }
    Ok(())
}

// Serialized form: flat row-major weight blocks plus bias vectors.
#[derive(Serialize, Deserialize)]
struct ModelFile {
    layer_dims: Vec<usize>,
    w: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
}

impl From<&MlpModel> for ModelFile {
    fn from(m: &MlpModel) -> Self {
        Self {
            layer_dims: m.layer_dims.clone(),
            w: m.weights.iter().map(|w| w.as_slice().to_vec()).collect(),
            b: m.biases.clone(),
        }
    }
}

impl ModelFile {
    fn into_model(self) -> Result<MlpModel> {
        if self.layer_dims.len() < 2 {
            return Err(Error::Parse {
                location: "layer_dims".into(),
                message: "fewer than two layers".into(),
            });
        }
        let mut weights = Vec::with_capacity(self.w.len());
        for (l, flat) in self.w.into_iter().enumerate() {
            if l + 1 >= self.layer_dims.len() {
                return Err(Error::Parse {
                    location: format!("w[{l}]"),
                    message: "more weight blocks than layers".into(),
                });
            }
            let (rows, cols) = (self.layer_dims[l + 1], self.layer_dims[l]);
            weights.push(Mat::from_vec(rows, cols, flat).map_err(|_| Error::Parse {
                location: format!("w[{l}]"),
                message: "weight block size does not match layer_dims".into(),
            })?);
        }
        MlpModel::from_parameters(self.layer_dims, weights, self.b)
    }
}

/// Per-layer forward caches plus backprop delta buffers.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    input: Vec<f64>,
    layers: Vec<LayerCache>,
    delta_a: Vec<f64>,
    delta_b: Vec<f64>,
}

#[derive(Debug, Clone)]
struct LayerCache {
    z: Vec<f64>,
    act: Vec<f64>,
}

impl ForwardCache {
    pub fn for_model(model: &MlpModel) -> Self {
        let layers: Vec<LayerCache> = model
            .layer_dims
            .iter()
            .skip(1)
            .map(|&d| LayerCache {
                z: vec![0.0; d],
                act: vec![0.0; d],
            })
            .collect();
        Self {
            input: Vec::with_capacity(model.input_dim()),
            layers,
            delta_a: Vec::new(),
            delta_b: Vec::new(),
        }
    }

    /// Activation feeding layer `l`, together with layer `l`'s own cache.
    fn io_at_layer(&mut self, l: usize) -> (&[f64], &mut LayerCache) {
        let (head, rest) = self.layers.split_at_mut(l);
        let input: &[f64] = if l == 0 { &self.input } else { &head[l - 1].act };
        (input, &mut rest[0])
    }
}

/// Ping-pong buffers for cache-free prediction.
#[derive(Debug, Default, Clone)]
pub struct EvalScratch {
    a: Vec<f64>,
    b: Vec<f64>,
}

/// Parameter-shaped gradient accumulator.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub dw: Vec<Mat>,
    pub db: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(model: &MlpModel) -> Self {
        Self {
            dw: model
                .weights
                .iter()
                .map(|w| Mat::zeros(w.rows(), w.cols()))
                .collect(),
            db: model.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn zero(&mut self) {
        for w in &mut self.dw {
            w.fill(0.0);
        }
        for b in &mut self.db {
            b.fill(0.0);
        }
    }

    pub fn max_abs(&self) -> f64 {
        let w = self
            .dw
            .iter()
            .flat_map(|m| m.as_slice())
            .fold(0.0f64, |a, &v| a.max(v.abs()));
        self.db
            .iter()
            .flatten()
            .fold(w, |a, &v| a.max(v.abs()))
    }
}

/// Exact reverse-mode gradients of the mean batch loss. Returns the gradients
/// and the batch loss.
pub fn backward(
    model: &MlpModel,
    inputs: &Mat,
    targets: &[f64],
    loss: Loss,
) -> Result<(Gradients, f64)> {
    if inputs.rows() != targets.len() {
        return Err(Error::Dimension {
            context: "backward targets length",
            expected: inputs.rows(),
            got: targets.len(),
        });
    }
    let idx: Vec<usize> = (0..inputs.rows()).collect();
    let mut grads = Gradients::zeros_like(model);
    let mut cache = ForwardCache::for_model(model);
    let loss_val = backward_indexed(model, inputs, &idx, targets, loss, &mut cache, &mut grads)?;
    Ok((grads, loss_val))
}

/// Accumulating core of [`backward`]: rows of `inputs` selected by `idx`,
/// targets indexed the same way. `grads` must be zeroed by the caller.
fn backward_indexed(
    model: &MlpModel,
    inputs: &Mat,
    idx: &[usize],
    targets: &[f64],
    loss: Loss,
    cache: &mut ForwardCache,
    grads: &mut Gradients,
) -> Result<f64> {
    if idx.is_empty() {
        return Err(Error::Config("empty batch".into()));
    }
    let inv_b = 1.0 / idx.len() as f64;
    let mut total_loss = 0.0;
    let last = model.num_layers() - 1;
    for &row in idx {
        let x = inputs.row(row);
        let t = targets[row];
        let y = model.forward_cached(x, cache)?;
        let r = y - t;
        let (contrib, dout) = match loss {
            Loss::Mse => (r * r, 2.0 * r * inv_b),
            Loss::Mae => (r.abs(), if r == 0.0 { 0.0 } else { r.signum() * inv_b }),
        };
        total_loss += contrib;

        cache.delta_b.clear();
        cache.delta_b.push(dout);
        for l in (0..=last).rev() {
            // dW_l += delta (x) activation_{l}, db_l += delta
            {
                let act: &[f64] = if l == 0 {
                    &cache.input
                } else {
                    &cache.layers[l - 1].act
                };
                grads.dw[l].add_outer(&cache.delta_b, act);
                for (g, d) in grads.db[l].iter_mut().zip(&cache.delta_b) {
                    *g += d;
                }
            }
            if l > 0 {
                cache.delta_a.resize(model.layer_dims[l], 0.0);
                model.weights[l].matvec_transpose(&cache.delta_b, &mut cache.delta_a);
                for (d, &z) in cache.delta_a.iter_mut().zip(&cache.layers[l - 1].z) {
                    if z <= 0.0 {
                        *d = 0.0;
                    }
                }
                std::mem::swap(&mut cache.delta_a, &mut cache.delta_b);
            }
        }
    }
    Ok(total_loss * inv_b)
}

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second-moment accumulators shaped like the model parameters.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub params: AdamParams,
    m: Gradients,
    v: Gradients,
    t: u64,
}

impl AdamState {
    pub fn new(model: &MlpModel, params: AdamParams) -> Self {
        Self {
            params,
            m: Gradients::zeros_like(model),
            v: Gradients::zeros_like(model),
            t: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

/// One Adam update with bias correction.
pub fn adam_step(model: &mut MlpModel, grads: &Gradients, state: &mut AdamState) {
    state.t += 1;
    let p = state.params;
    let bc1 = 1.0 - p.beta1.powi(state.t as i32);
    let bc2 = 1.0 - p.beta2.powi(state.t as i32);
    for l in 0..model.weights.len() {
        adam_update_slice(
            model.weights[l].as_mut_slice(),
            grads.dw[l].as_slice(),
            state.m.dw[l].as_mut_slice(),
            state.v.dw[l].as_mut_slice(),
            p,
            bc1,
            bc2,
        );
        adam_update_slice(
            &mut model.biases[l],
            &grads.db[l],
            &mut state.m.db[l],
            &mut state.v.db[l],
            p,
            bc1,
            bc2,
        );
    }
}

#[inline]
fn adam_update_slice(
    w: &mut [f64],
    g: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    p: AdamParams,
    bc1: f64,
    bc2: f64,
) {
    for i in 0..w.len() {
        m[i] = p.beta1 * m[i] + (1.0 - p.beta1) * g[i];
        v[i] = p.beta2 * v[i] + (1.0 - p.beta2) * g[i] * g[i];
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        w[i] -= p.lr * m_hat / (v_hat.sqrt() + p.eps);
    }
}

/// Options for [`train`]. The convergence tolerance applies to validation
/// normalized MAE (MAE divided by the train-split mean absolute target).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainOptions {
    pub batch_size: usize,
    pub max_epochs: usize,
    pub tolerance: f64,
    pub patience: usize,
    pub loss: Loss,
    pub lr: f64,
    /// Per-epoch learning-rate multiplier (1.0 keeps the rate constant),
    /// floored at `lr * 1e-3`. Constant-rate Adam plateaus one to two orders
    /// of magnitude above the target accuracy; geometric annealing pushes
    /// through without touching the stop rule.
    pub lr_decay: f64,
    pub seed: u64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            batch_size: 256,
            max_epochs: 500,
            tolerance: 1e-3,
            patience: 20,
            loss: Loss::Mse,
            lr: 1e-3,
            lr_decay: 0.99,
            seed: 0,
        }
    }
}

/// Outcome of one subnetwork training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs_run: usize,
    pub train_loss: Vec<f64>,
    pub val_nmae: Vec<f64>,
    pub converged: bool,
    /// Starting validation nMAE of the initial parameters, before any update.
    pub initial_val_nmae: f64,
    /// Wall-clock seconds (0 on targets without a monotonic clock).
    pub wall_seconds: f64,
}

// Instant is unavailable on wasm32-unknown-unknown.
#[cfg(not(target_arch = "wasm32"))]
mod clock {
    pub struct Stopwatch(std::time::Instant);
    impl Stopwatch {
        pub fn start() -> Self {
            Self(std::time::Instant::now())
        }
        pub fn seconds(&self) -> f64 {
            self.0.elapsed().as_secs_f64()
        }
    }
}
#[cfg(target_arch = "wasm32")]
mod clock {
    pub struct Stopwatch;
    impl Stopwatch {
        pub fn start() -> Self {
            Self
        }
        pub fn seconds(&self) -> f64 {
            0.0
        }
    }
}

/// Minibatch Adam with seeded shuffling and early stopping.
///
/// Stops when validation nMAE falls to `tolerance`, when it has not improved
/// by more than 1e-5 for `patience` consecutive epochs, or at `max_epochs`.
pub fn train(
    mut model: MlpModel,
    view: &ChannelView,
    opts: &TrainOptions,
) -> Result<(MlpModel, TrainReport)> {
    let watch = clock::Stopwatch::start();
    if view.inputs.cols() != model.input_dim() {
        return Err(Error::Dimension {
            context: "training input width",
            expected: model.input_dim(),
            got: view.inputs.cols(),
        });
    }
    if opts.batch_size == 0 {
        return Err(Error::Config("batch_size must be >= 1".into()));
    }
    let train_idx: Vec<usize> = view.rows_of(Split::Train).collect();
    let val_idx: Vec<usize> = view.rows_of(Split::Val).collect();
    if train_idx.is_empty() || val_idx.is_empty() {
        return Err(Error::Config("train and validation splits must be nonempty".into()));
    }
    let norm = view.train_abs_target_mean();
    if !(norm > 0.0) {
        return Err(Error::Numerical(
            "degenerate targets: train-split mean absolute target is zero".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut adam = AdamState::new(
        &model,
        AdamParams {
            lr: opts.lr,
            ..AdamParams::default()
        },
    );
    let mut grads = Gradients::zeros_like(&model);
    let mut cache = ForwardCache::for_model(&model);
    let mut scratch = EvalScratch::default();
    let mut order = train_idx.clone();

    let initial_val_nmae = val_nmae(&model, view, &val_idx, norm, &mut scratch)?;
    let mut report = TrainReport {
        epochs_run: 0,
        train_loss: Vec::new(),
        val_nmae: Vec::new(),
        converged: false,
        initial_val_nmae,
        wall_seconds: 0.0,
    };

    let mut best = initial_val_nmae;
    let mut stale_epochs = 0usize;
    for epoch in 1..=opts.max_epochs {
        shuffle(&mut order, &mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(opts.batch_size) {
            grads.zero();
            let batch_loss = backward_indexed(
                &model,
                &view.inputs,
                chunk,
                &view.targets,
                opts.loss,
                &mut cache,
                &mut grads,
            )?;
            if !batch_loss.is_finite() {
                return Err(Error::Diverged { channel: 0, epoch });
            }
            adam_step(&mut model, &grads, &mut adam);
            epoch_loss += batch_loss * chunk.len() as f64;
        }
        epoch_loss /= order.len() as f64;

        let nmae = val_nmae(&model, view, &val_idx, norm, &mut scratch)?;
        if !nmae.is_finite() {
            return Err(Error::Diverged { channel: 0, epoch });
        }
        report.train_loss.push(epoch_loss);
        report.val_nmae.push(nmae);
        report.epochs_run = epoch;

        if nmae <= opts.tolerance {
            report.converged = true;
            break;
        }
        if nmae < best - 1e-5 {
            best = nmae;
            stale_epochs = 0;
        } else {
            stale_epochs += 1;
            if stale_epochs >= opts.patience {
                break;
            }
        }
        adam.params.lr = (adam.params.lr * opts.lr_decay).max(opts.lr * 1e-3);
    }
    report.wall_seconds = watch.seconds();
    Ok((model, report))
}

/// Validation normalized MAE with an externally fixed normalizer.
fn val_nmae(
    model: &MlpModel,
    view: &ChannelView,
    val_idx: &[usize],
    norm: f64,
    scratch: &mut EvalScratch,
) -> Result<f64> {
    let mut acc = 0.0;
    for &i in val_idx {
        let y = model.predict(view.inputs.row(i), scratch)?;
        acc += (y - view.targets[i]).abs();
    }
    Ok(acc / val_idx.len() as f64 / norm)
}

// Fisher-Yates, kept local so the shuffle sequence is pinned to this crate
// rather than to rand's evolving SliceRandom implementation.
fn shuffle(order: &mut [usize], rng: &mut ChaCha8Rng) {
    for i in (1..order.len()).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
}
