//! Masked multilayer perceptrons.
//!
//! Layer `l` maps `layer_sizes[l]` inputs to `layer_sizes[l+1]` outputs
//! through a CSR weight matrix (fan_out x fan_in) masked by a per-layer
//! [`ConstructionSpec`]. The bipartite topology itself is built
//! input-side major — `n = fan_in` left vertices each connecting to `k`
//! of `m = fan_out` right vertices — and the weight matrix stores its
//! transpose, so the degree knob `k` caps connections per *input*
//! neuron. Activations are sigmoid everywhere including the output; the
//! loss is mean squared
//! error against one-hot targets, averaged over output units and over
//! the batch. Training is minibatch SGD with Nesterov momentum in the
//! lookahead-gradient form
//!
//! ```text
//! g = grad L(theta + mu v),  v <- mu v - eta g,  theta <- theta + v
//! ```
//!
//! applied only to stored CSR entries and biases. Dropout, when
//! configured, is inverted: kept units are scaled by 1/(1-rate) at train
//! time and evaluation applies no correction.

mod checkpoint;

use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use crate::seed::{self, stream};
use crate::topology::{self, BipartiteTopology, ConstructionSpec};

pub use checkpoint::{load_checkpoint, save_checkpoint};

/// Hyperparameters and per-layer topology choices for one network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    /// Layer widths, input first, output last. Length >= 2.
    pub layer_sizes: Vec<usize>,
    /// One construction per weight layer; `k` counts connections per
    /// *input* neuron and must satisfy `k <= fan_out`.
    pub topologies: Vec<ConstructionSpec>,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Optional drop rates, one per droppable activation: index 0 is the
    /// input layer, index `l >= 1` the l-th hidden layer. Length must be
    /// the number of weight layers; the output is never dropped.
    pub dropout_rates: Option<Vec<f64>>,
    pub init_seed: u64,
    /// Scale initial weights by per-entry stored degrees instead of the
    /// full layer dimensions (ablation knob; default off).
    pub degree_scaled_init: bool,
}

impl NetworkConfig {
    /// Paper-default hyperparameters: lr 0.01, Nesterov momentum 0.9,
    /// batch 32, 50 epochs, no dropout.
    pub fn new(layer_sizes: Vec<usize>, topologies: Vec<ConstructionSpec>, init_seed: u64) -> Self {
        NetworkConfig {
            layer_sizes,
            topologies,
            learning_rate: 0.01,
            momentum: 0.9,
            batch_size: 32,
            epochs: 50,
            dropout_rates: None,
            init_seed,
            degree_scaled_init: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 2 {
            return Err(Error::InvalidConfig(
                "need at least input and output layers".into(),
            ));
        }
        if self.layer_sizes.contains(&0) {
            return Err(Error::InvalidConfig("layer sizes must be positive".into()));
        }
        let weight_layers = self.layer_sizes.len() - 1;
        if self.topologies.len() != weight_layers {
            return Err(Error::DimensionMismatch {
                context: "one topology spec per weight layer",
                expected: weight_layers,
                got: self.topologies.len(),
            });
        }
        for (l, spec) in self.topologies.iter().enumerate() {
            spec.validate(self.layer_sizes[l + 1])?;
        }
        if self.learning_rate <= 0.0 || !self.learning_rate.is_finite() {
            return Err(Error::InvalidConfig("learning_rate must be > 0".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidConfig("momentum must be in [0, 1)".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
        }
        if let Some(rates) = &self.dropout_rates {
            if rates.len() != weight_layers {
                return Err(Error::DimensionMismatch {
                    context: "one dropout rate per non-output layer",
                    expected: weight_layers,
                    got: rates.len(),
                });
            }
            if rates.iter().any(|r| !(0.0..1.0).contains(r)) {
                return Err(Error::InvalidConfig(
                    "dropout rates must be in [0, 1)".into(),
                ));
            }
        }
        Ok(())
    }
}

/// One weight layer: CSR weights, bias, and momentum buffers congruent
/// with the stored values.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseLayer {
    pub weights: CsrMatrix,
    pub bias: Vec<f64>,
    pub w_velocity: Vec<f64>,
    pub b_velocity: Vec<f64>,
}

impl SparseLayer {
    pub fn fan_out(&self) -> usize {
        self.weights.rows()
    }

    pub fn fan_in(&self) -> usize {
        self.weights.cols()
    }
}

/// Gradient buffers mirroring a network's parameters. The weight part of
/// each layer is a CSR matrix sharing the layer's pattern, so masked
/// positions can never receive gradient.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<(CsrMatrix, Vec<f64>)>,
}

impl Gradients {
    pub fn zero(&mut self) {
        for (w, b) in &mut self.layers {
            w.values_mut().fill(0.0);
            b.fill(0.0);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for (w, b) in &mut self.layers {
            for v in w.values_mut() {
                *v *= factor;
            }
            for v in b {
                *v *= factor;
            }
        }
    }
}

/// A trained or trainable masked MLP.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    cfg: NetworkConfig,
    layers: Vec<SparseLayer>,
}

/// Forward-pass mode. Train mode draws fresh inverted-dropout masks from
/// the given seed; eval mode ignores dropout entirely.
#[derive(Debug, Clone, Copy)]
pub enum ForwardMode {
    Eval,
    Train { dropout_seed: u64 },
}

/// Everything backward needs from one forward pass: per-layer sigmoid
/// activations `a_0..a_L` (`a_0` is the raw input) and, in train mode,
/// the dropout multiplier applied to each droppable activation.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub activations: Vec<Vec<f64>>,
    pub masks: Option<Vec<Vec<f64>>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.activations.last().unwrap()
    }

    /// The vector actually fed into weight layer `l`.
    fn layer_input(&self, l: usize) -> Vec<f64> {
        match &self.masks {
            Some(masks) => self.activations[l]
                .iter()
                .zip(&masks[l])
                .map(|(a, m)| a * m)
                .collect(),
            None => self.activations[l].clone(),
        }
    }
}

fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// Initialize a network from its config: Glorot Gaussian weights with
/// sigma = sqrt(2 / (fan_in + fan_out)) over the full layer dimensions
/// (the mask is applied to an initialized dense layer, so fans do not
/// shrink with sparsity), zero biases, zero velocities. Deterministic in
/// `cfg.init_seed`.
pub fn init_network(cfg: NetworkConfig) -> Result<Network> {
    cfg.validate()?;
    let topologies: Vec<BipartiteTopology> = cfg
        .topologies
        .iter()
        .enumerate()
        .map(|(l, spec)| topology::build(*spec, cfg.layer_sizes[l], cfg.layer_sizes[l + 1]))
        .collect::<Result<_>>()?;
    Network::from_topologies(cfg, &topologies)
}

impl Network {
    /// Like [`init_network`], but reusing topologies the caller already
    /// built. Topology `l` must be input-side major: `fan_in` left
    /// vertices, `fan_out` right; the weight matrix stores its
    /// transpose.
    pub fn from_topologies(
        cfg: NetworkConfig,
        topologies: &[BipartiteTopology],
    ) -> Result<Network> {
        cfg.validate()?;
        if topologies.len() != cfg.layer_sizes.len() - 1 {
            return Err(Error::DimensionMismatch {
                context: "topology count",
                expected: cfg.layer_sizes.len() - 1,
                got: topologies.len(),
            });
        }
        let mut rng = seed::rng(cfg.init_seed);
        let mut layers = Vec::with_capacity(topologies.len());
        for (l, t) in topologies.iter().enumerate() {
            let fan_out = cfg.layer_sizes[l + 1];
            let fan_in = cfg.layer_sizes[l];
            if t.left_count() != fan_in || t.right_count() != fan_out {
                return Err(Error::DimensionMismatch {
                    context: "topology shape vs layer sizes",
                    expected: fan_in * fan_out,
                    got: t.left_count() * t.right_count(),
                });
            }
            let weight_pattern = t.transposed();
            let weights = if cfg.degree_scaled_init {
                let in_degrees = weight_pattern.column_degrees();
                let out_rows = weight_pattern.rows();
                let normal = Normal::new(0.0, 1.0).unwrap();
                CsrMatrix::from_topology(&weight_pattern, |r, c| {
                    let fans = (out_rows[r].len() + in_degrees[c]).max(1);
                    let sigma = (2.0 / fans as f64).sqrt();
                    sigma * normal.sample(&mut rng)
                })
            } else {
                let sigma = (2.0 / (fan_in + fan_out) as f64).sqrt();
                let normal = Normal::new(0.0, sigma).unwrap();
                CsrMatrix::from_topology(&weight_pattern, |_, _| normal.sample(&mut rng))
            };
            let nnz = weights.nnz();
            layers.push(SparseLayer {
                weights,
                bias: vec![0.0; fan_out],
                w_velocity: vec![0.0; nnz],
                b_velocity: vec![0.0; fan_out],
            });
        }
        Ok(Network { cfg, layers })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.cfg
    }

    pub fn layers(&self) -> &[SparseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [SparseLayer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.cfg.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.cfg.layer_sizes.last().unwrap()
    }

    pub fn zero_gradients(&self) -> Gradients {
        Gradients {
            layers: self
                .layers
                .iter()
                .map(|layer| {
                    let mut w = layer.weights.clone();
                    w.values_mut().fill(0.0);
                    (w, vec![0.0; layer.fan_out()])
                })
                .collect(),
        }
    }

    /// Forward pass; see [`ForwardMode`].
    pub fn forward(&self, x: &[f64], mode: ForwardMode) -> Result<ForwardCache> {
        match mode {
            ForwardMode::Eval => self.forward_impl(x, None),
            ForwardMode::Train { dropout_seed } => {
                let mut rng = seed::rng(dropout_seed);
                self.forward_impl(x, Some(&mut rng))
            }
        }
    }

    /// Output activations in eval mode.
    pub fn forward_eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut cache = self.forward_impl(x, None)?;
        Ok(cache.activations.pop().expect("at least the input layer"))
    }

    fn forward_impl(&self, x: &[f64], mut rng: Option<&mut ChaCha8Rng>) -> Result<ForwardCache> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "forward input length",
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        let dropout = match (&self.cfg.dropout_rates, &mut rng) {
            (Some(rates), Some(_)) => Some(rates.clone()),
            _ => None,
        };
        let mut activations: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len() + 1);
        let mut masks: Option<Vec<Vec<f64>>> = dropout.as_ref().map(|_| Vec::new());
        activations.push(x.to_vec());
        let mut cur = x.to_vec();
        for (l, layer) in self.layers.iter().enumerate() {
            if let (Some(rates), Some(rng)) = (&dropout, rng.as_deref_mut()) {
                let rate = rates[l];
                let mask: Vec<f64> = cur
                    .iter()
                    .map(|_| {
                        if rate > 0.0 && rng.random::<f64>() < rate {
                            0.0
                        } else if rate > 0.0 {
                            1.0 / (1.0 - rate)
                        } else {
                            1.0
                        }
                    })
                    .collect();
                for (v, m) in cur.iter_mut().zip(&mask) {
                    *v *= m;
                }
                masks.as_mut().unwrap().push(mask);
            }
            let mut z = layer.weights.spmv(&cur)?;
            for (zi, b) in z.iter_mut().zip(&layer.bias) {
                *zi = sigmoid(*zi + b);
            }
            activations.push(z.clone());
            cur = z;
        }
        Ok(ForwardCache { activations, masks })
    }

    /// Mean-over-outputs squared error of one output/target pair.
    pub fn loss(output: &[f64], target: &[f64]) -> f64 {
        let c = output.len() as f64;
        output
            .iter()
            .zip(target)
            .map(|(a, t)| (a - t) * (a - t))
            .sum::<f64>()
            / c
    }

    /// Backpropagate one sample, *adding* parameter gradients into
    /// `grads`. Weight gradients land only on stored CSR entries.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        target: &[f64],
        grads: &mut Gradients,
    ) -> Result<()> {
        if target.len() != self.output_dim() {
            return Err(Error::DimensionMismatch {
                context: "backward target length",
                expected: self.output_dim(),
                got: target.len(),
            });
        }
        let c = self.output_dim() as f64;
        let out = cache.output();
        // dL/dz at the output: 2(a - t)/C * a(1 - a)
        let mut delta: Vec<f64> = out
            .iter()
            .zip(target)
            .map(|(a, t)| 2.0 * (a - t) / c * a * (1.0 - a))
            .collect();
        for l in (0..self.layers.len()).rev() {
            let input = cache.layer_input(l);
            let (gw, gb) = &mut grads.layers[l];
            gw.outer_accumulate(&delta, &input, 1.0)?;
            for (g, d) in gb.iter_mut().zip(&delta) {
                *g += d;
            }
            if l == 0 {
                break;
            }
            let mut upstream = self.layers[l].weights.spmv_transpose(&delta)?;
            if let Some(masks) = &cache.masks {
                for (u, m) in upstream.iter_mut().zip(&masks[l]) {
                    *u *= m;
                }
            }
            let a = &cache.activations[l];
            delta = upstream
                .iter()
                .zip(a)
                .map(|(u, a)| u * a * (1.0 - a))
                .collect();
        }
        Ok(())
    }

    /// Single-sample gradients in eval mode (no dropout); the
    /// finite-difference harnesses check exactly this path.
    pub fn gradients_for(&self, x: &[f64], target: &[f64]) -> Result<(f64, Gradients)> {
        let cache = self.forward(x, ForwardMode::Eval)?;
        let loss = Self::loss(cache.output(), target);
        let mut grads = self.zero_gradients();
        self.backward(&cache, target, &mut grads)?;
        Ok((loss, grads))
    }

    /// One Nesterov step over a batch; returns the mean batch loss
    /// (evaluated at the lookahead point). `dropout_rng` drives mask
    /// draws when the config enables dropout.
    pub fn sgd_nesterov_step(
        &mut self,
        batch: &[(&[f64], &[f64])],
        grads: &mut Gradients,
        dropout_rng: Option<&mut ChaCha8Rng>,
    ) -> Result<f64> {
        assert!(!batch.is_empty(), "batch must be non-empty");
        let mu = self.cfg.momentum;
        let eta = self.cfg.learning_rate;

        // theta' = theta + mu v (lookahead)
        for layer in &mut self.layers {
            for (w, v) in layer.weights.values_mut().iter_mut().zip(&layer.w_velocity) {
                *w += mu * v;
            }
            for (b, v) in layer.bias.iter_mut().zip(&layer.b_velocity) {
                *b += mu * v;
            }
        }

        grads.zero();
        let mut total_loss = 0.0;
        let mut rng = dropout_rng;
        for (x, target) in batch {
            let cache = self.forward_impl(x, rng.as_deref_mut())?;
            total_loss += Self::loss(cache.output(), target);
            self.backward(&cache, target, grads)?;
        }
        grads.scale(1.0 / batch.len() as f64);

        // v <- mu v - eta g;  theta <- theta' - eta g  (= theta + v)
        for (layer, (gw, gb)) in self.layers.iter_mut().zip(&grads.layers) {
            for ((w, v), g) in layer
                .weights
                .values_mut()
                .iter_mut()
                .zip(&mut layer.w_velocity)
                .zip(gw.values())
            {
                *v = mu * *v - eta * g;
                *w -= eta * g;
            }
            for ((b, v), g) in layer.bias.iter_mut().zip(&mut layer.b_velocity).zip(gb) {
                *v = mu * *v - eta * g;
                *b -= eta * g;
            }
        }
        Ok(total_loss / batch.len() as f64)
    }
}

/// One epoch row of a training record.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub test_accuracy: f64,
}

/// Result of [`train`]: initial evaluation, one record per epoch, final
/// per-layer weight statistics and wall-clock time.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainRecord {
    pub initial_accuracy: f64,
    pub epochs: Vec<EpochRecord>,
    /// Per-layer (max, min, population std) over stored weights.
    pub weight_stats: Vec<(f64, f64, f64)>,
    pub wall_seconds: f64,
}

impl TrainRecord {
    pub fn final_accuracy(&self) -> f64 {
        self.epochs
            .last()
            .map(|e| e.test_accuracy)
            .unwrap_or(self.initial_accuracy)
    }

    /// Epoch table as CSV. Epoch 0 is the pre-training evaluation and
    /// has an empty loss field.
    pub fn write_epochs_csv<W: std::io::Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "epoch,train_loss,test_accuracy")?;
        writeln!(w, "0,,{}", self.initial_accuracy)?;
        for e in &self.epochs {
            writeln!(w, "{},{},{}", e.epoch, e.train_loss, e.test_accuracy)?;
        }
        Ok(())
    }

    pub fn write_weight_stats_csv<W: std::io::Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "layer,max,min,std")?;
        for (l, (max, min, std)) in self.weight_stats.iter().enumerate() {
            writeln!(w, "{l},{max},{min},{std}")?;
        }
        Ok(())
    }
}

/// Fraction of samples whose argmax output matches the label; ties break
/// toward the lowest class index.
pub fn evaluate(net: &Network, test_set: &crate::dataset::Dataset) -> Result<f64> {
    assert!(!test_set.is_empty(), "test set must be non-empty");
    let mut hits = 0usize;
    for (x, label) in &test_set.samples {
        let out = net.forward_eval(x)?;
        let mut best = 0usize;
        for (i, v) in out.iter().enumerate() {
            if *v > out[best] {
                best = i;
            }
        }
        if best == *label {
            hits += 1;
        }
    }
    Ok(hits as f64 / test_set.len() as f64)
}

/// Train for `cfg.epochs` epochs: each epoch shuffles with a seeded
/// permutation (seed derived from `(init_seed, epoch)`), partitions into
/// `batch_size` minibatches (final short batch included) and steps each
/// one, then evaluates test accuracy.
pub fn train(
    net: &mut Network,
    train_set: &crate::dataset::Dataset,
    test_set: &crate::dataset::Dataset,
) -> Result<TrainRecord> {
    assert!(!train_set.is_empty() && !test_set.is_empty());
    if train_set.input_dim != net.input_dim() {
        return Err(Error::DimensionMismatch {
            context: "train set feature length",
            expected: net.input_dim(),
            got: train_set.input_dim,
        });
    }
    let start = Instant::now();
    let classes = net.output_dim();
    // features stay in the dataset; only the one-hot targets materialize
    let targets: Vec<Vec<f64>> = train_set
        .samples
        .iter()
        .map(|(_, label)| crate::dataset::one_hot(*label, classes))
        .collect::<Result<_>>()?;

    let init_seed = net.cfg.init_seed;
    let n = train_set.len();
    let batch_size = net.cfg.batch_size;
    let mut grads = net.zero_gradients();
    let mut record = TrainRecord {
        initial_accuracy: evaluate(net, test_set)?,
        epochs: Vec::with_capacity(net.cfg.epochs),
        weight_stats: Vec::new(),
        wall_seconds: 0.0,
    };

    for epoch in 1..=net.cfg.epochs {
        let mut order: Vec<usize> = (0..n).collect();
        let mut shuffle_rng = seed::rng(seed::derive(init_seed, stream::SHUFFLE, epoch as u64));
        for i in (1..n).rev() {
            let j = shuffle_rng.random_range(0..=i);
            order.swap(i, j);
        }
        let mut dropout_rng = seed::rng(seed::derive(init_seed, stream::DROPOUT, epoch as u64));
        let use_dropout = net.cfg.dropout_rates.is_some();

        let mut loss_sum = 0.0;
        for chunk in order.chunks(batch_size) {
            let batch: Vec<(&[f64], &[f64])> = chunk
                .iter()
                .map(|&i| (train_set.samples[i].0.as_slice(), targets[i].as_slice()))
                .collect();
            let rng = use_dropout.then_some(&mut dropout_rng);
            let loss = net.sgd_nesterov_step(&batch, &mut grads, rng)?;
            loss_sum += loss * batch.len() as f64;
        }
        record.epochs.push(EpochRecord {
            epoch,
            train_loss: loss_sum / n as f64,
            test_accuracy: evaluate(net, test_set)?,
        });
    }
    record.weight_stats = weight_statistics(net);
    record.wall_seconds = start.elapsed().as_secs_f64();
    Ok(record)
}

/// Per-layer (max, min, population std) of the stored ("connected")
/// weights. Layers with no stored entries report (0, 0, 0).
pub fn weight_statistics(net: &Network) -> Vec<(f64, f64, f64)> {
    net.layers
        .iter()
        .map(|layer| {
            let vals = layer.weights.values();
            if vals.is_empty() {
                return (0.0, 0.0, 0.0);
            }
            let mut max = f64::NEG_INFINITY;
            let mut min = f64::INFINITY;
            let mut sum = 0.0;
            for &v in vals {
                max = max.max(v);
                min = min.min(v);
                sum += v;
            }
            let mean = sum / vals.len() as f64;
            let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / vals.len() as f64;
            (max, min, var.sqrt())
        })
        .collect()
}
