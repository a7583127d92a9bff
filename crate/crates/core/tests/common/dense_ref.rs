//! Dense masked reference network: weights live in full dense matrices,
//! gradients are computed densely and the adjacency mask is re-applied
//! within every update, which is the textbook way to realize the mask.
//! Initialization draws, shuffling, batching and the Nesterov update all
//! mirror the CSR implementation step for step, so the two must agree on
//! losses and weights essentially to machine precision.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use sparsenet::dataset::{one_hot, Dataset};
use sparsenet::network::NetworkConfig;
use sparsenet::seed::{self, stream};
use sparsenet::topology::BipartiteTopology;

fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

pub struct DenseMaskedNet {
    pub layer_sizes: Vec<usize>,
    pub w: Vec<Vec<Vec<f64>>>, // [layer][out][in]
    pub mask: Vec<Vec<Vec<bool>>>,
    pub b: Vec<Vec<f64>>,
    vw: Vec<Vec<Vec<f64>>>,
    vb: Vec<Vec<f64>>,
    lr: f64,
    mu: f64,
    batch_size: usize,
    init_seed: u64,
}

impl DenseMaskedNet {
    /// Same Glorot draws as the CSR network: one normal sample per masked
    /// entry, row-major edge order, from ChaCha8(init_seed).
    pub fn init(cfg: &NetworkConfig, topologies: &[BipartiteTopology]) -> Self {
        let mut rng = seed::rng(cfg.init_seed);
        let mut w = Vec::new();
        let mut mask = Vec::new();
        let mut b = Vec::new();
        for (l, t) in topologies.iter().enumerate() {
            let fan_in = cfg.layer_sizes[l];
            let fan_out = cfg.layer_sizes[l + 1];
            let sigma = (2.0 / (fan_in + fan_out) as f64).sqrt();
            let normal = Normal::new(0.0, sigma).unwrap();
            let mut lw = vec![vec![0.0; fan_in]; fan_out];
            let mut lm = vec![vec![false; fan_in]; fan_out];
            // same orientation and draw order as the CSR network: the
            // weight pattern is the transposed topology, filled row-major
            let weight_pattern = t.transposed();
            for (r, row) in weight_pattern.rows().iter().enumerate() {
                for &c in row {
                    lw[r][c] = normal.sample(&mut rng);
                    lm[r][c] = true;
                }
            }
            w.push(lw);
            mask.push(lm);
            b.push(vec![0.0; fan_out]);
        }
        let vw = w
            .iter()
            .map(|lw| lw.iter().map(|row| vec![0.0; row.len()]).collect())
            .collect();
        let vb = b.iter().map(|lb| vec![0.0; lb.len()]).collect();
        DenseMaskedNet {
            layer_sizes: cfg.layer_sizes.clone(),
            w,
            mask,
            b,
            vw,
            vb,
            lr: cfg.learning_rate,
            mu: cfg.momentum,
            batch_size: cfg.batch_size,
            init_seed: cfg.init_seed,
        }
    }

    fn forward(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = vec![x.to_vec()];
        for l in 0..self.w.len() {
            let prev = acts.last().unwrap();
            let out: Vec<f64> = self.w[l]
                .iter()
                .zip(&self.b[l])
                .map(|(row, bias)| {
                    let mut acc = 0.0;
                    for (wi, a) in row.iter().zip(prev) {
                        acc += wi * a;
                    }
                    sigmoid(acc + bias)
                })
                .collect();
            acts.push(out);
        }
        acts
    }

    fn loss(output: &[f64], target: &[f64]) -> f64 {
        let c = output.len() as f64;
        output
            .iter()
            .zip(target)
            .map(|(a, t)| (a - t) * (a - t))
            .sum::<f64>()
            / c
    }

    /// One Nesterov batch step, mirroring the CSR update order exactly,
    /// with gradients masked so non-edges never move (and the weight
    /// mask re-applied afterwards for good measure).
    fn step(&mut self, batch: &[(Vec<f64>, Vec<f64>)]) -> f64 {
        let (mu, eta) = (self.mu, self.lr);
        for l in 0..self.w.len() {
            for r in 0..self.w[l].len() {
                for c in 0..self.w[l][r].len() {
                    self.w[l][r][c] += mu * self.vw[l][r][c];
                }
                self.b[l][r] += mu * self.vb[l][r];
            }
        }

        let mut gw: Vec<Vec<Vec<f64>>> = self
            .w
            .iter()
            .map(|lw| lw.iter().map(|row| vec![0.0; row.len()]).collect())
            .collect();
        let mut gb: Vec<Vec<f64>> = self.b.iter().map(|lb| vec![0.0; lb.len()]).collect();
        let mut total_loss = 0.0;
        for (x, target) in batch {
            let acts = self.forward(x);
            let out = acts.last().unwrap();
            total_loss += Self::loss(out, target);
            let classes = out.len() as f64;
            let mut delta: Vec<f64> = out
                .iter()
                .zip(target)
                .map(|(a, t)| 2.0 * (a - t) / classes * a * (1.0 - a))
                .collect();
            for l in (0..self.w.len()).rev() {
                let input = &acts[l];
                for (r, d) in delta.iter().enumerate() {
                    for (c, a) in input.iter().enumerate() {
                        gw[l][r][c] += d * a;
                    }
                    gb[l][r] += d;
                }
                if l == 0 {
                    break;
                }
                // same scatter order as the CSR transpose kernel
                let mut upstream = vec![0.0; input.len()];
                for (r, d) in delta.iter().enumerate() {
                    for (c, u) in upstream.iter_mut().enumerate() {
                        *u += self.w[l][r][c] * d;
                    }
                }
                delta = upstream
                    .iter()
                    .zip(input)
                    .map(|(u, a)| u * a * (1.0 - a))
                    .collect();
            }
        }
        let scale = 1.0 / batch.len() as f64;
        for l in 0..self.w.len() {
            for r in 0..self.w[l].len() {
                for c in 0..self.w[l][r].len() {
                    gw[l][r][c] *= scale;
                }
                gb[l][r] *= scale;
            }
        }
        // the literal masking procedure: zero gradient off-mask, update,
        // then re-apply the mask to the weights
        for l in 0..self.w.len() {
            for r in 0..self.w[l].len() {
                for c in 0..self.w[l][r].len() {
                    if !self.mask[l][r][c] {
                        gw[l][r][c] = 0.0;
                    }
                    let g = gw[l][r][c];
                    self.vw[l][r][c] = mu * self.vw[l][r][c] - eta * g;
                    self.w[l][r][c] -= eta * g;
                    if !self.mask[l][r][c] {
                        self.w[l][r][c] = 0.0;
                    }
                }
                let g = gb[l][r];
                self.vb[l][r] = mu * self.vb[l][r] - eta * g;
                self.b[l][r] -= eta * g;
            }
        }
        total_loss / batch.len() as f64
    }

    /// Same epoch loop as `network::train`: seeded Fisher-Yates shuffle
    /// per epoch, fixed-size batches with a final short batch. Returns
    /// mean training loss per epoch.
    pub fn train(&mut self, train_set: &Dataset, epochs: usize) -> Vec<f64> {
        let classes = *self.layer_sizes.last().unwrap();
        let data: Vec<(Vec<f64>, Vec<f64>)> = train_set
            .samples
            .iter()
            .map(|(x, label)| (x.clone(), one_hot(*label, classes).unwrap()))
            .collect();
        let n = data.len();
        let mut losses = Vec::with_capacity(epochs);
        for epoch in 1..=epochs {
            let mut order: Vec<usize> = (0..n).collect();
            let mut rng = seed::rng(seed::derive(self.init_seed, stream::SHUFFLE, epoch as u64));
            for i in (1..n).rev() {
                let j = rng.random_range(0..=i);
                order.swap(i, j);
            }
            let mut loss_sum = 0.0;
            for chunk in order.chunks(self.batch_size) {
                let batch: Vec<(Vec<f64>, Vec<f64>)> =
                    chunk.iter().map(|&i| data[i].clone()).collect();
                loss_sum += self.step(&batch) * batch.len() as f64;
            }
            losses.push(loss_sum / n as f64);
        }
        losses
    }
}
