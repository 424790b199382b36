//! Causal dilated-convolution encoder trained with an unsupervised triplet loss.
//!
//! Architecture: `layers` causal convolutions (layer `i` has dilation `2^i`) with
//! `channels` filters, one output convolution (dilation `2^layers`) with
//! `out_channels` filters, a max-pool over time and a linear projection to
//! `latent_dim`. Every convolution is followed by a leaky rectifier. Gradients
//! are derived by hand for this fixed architecture.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::seed::rng;

pub const LEAKY_SLOPE: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderConfig {
    pub layers: usize,
    pub channels: usize,
    pub out_channels: usize,
    pub latent_dim: usize,
    pub kernel_size: usize,
    pub steps: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Negative samples per triplet.
    pub negatives: usize,
    /// Shortest sampled subseries, in slots.
    pub min_subseries: usize,
    /// Longest sampled anchor, in slots; bounds training cost on long series.
    pub max_subseries: usize,
    pub seed: u64,
}

impl EncoderConfig {
    /// Small network that trains in seconds on a laptop.
    pub fn desk() -> Self {
        Self {
            layers: 4,
            channels: 16,
            out_channels: 32,
            latent_dim: 32,
            kernel_size: 3,
            steps: 200,
            batch_size: 4,
            learning_rate: 1e-3,
            negatives: 5,
            min_subseries: 48,
            max_subseries: 336,
            seed: 0,
        }
    }

    /// 10 layers × 40 channels, 320 output channels, 160-dimensional latent,
    /// 10k steps of batch 128 at learning rate 1e-4.
    pub fn full() -> Self {
        Self {
            layers: 10,
            channels: 40,
            out_channels: 320,
            latent_dim: 160,
            kernel_size: 3,
            steps: 10_000,
            batch_size: 128,
            learning_rate: 1e-4,
            negatives: 10,
            min_subseries: 48,
            max_subseries: 1488,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(Error::InvalidArgument(msg.into())) };
        check(self.layers >= 1, "encoder needs at least one layer")?;
        check(self.layers < 32, "encoder dilation overflows beyond 31 layers")?;
        check(self.channels >= 1 && self.out_channels >= 1, "channel counts must be positive")?;
        check(self.latent_dim >= 2, "latent dimension must be at least 2")?;
        check(self.kernel_size >= 1, "kernel size must be positive")?;
        check(self.batch_size >= 1, "batch size must be positive")?;
        check(self.negatives >= 1, "at least one negative sample is required")?;
        check(self.min_subseries >= 1 && self.max_subseries >= self.min_subseries, "bad subseries bounds")?;
        check(self.learning_rate > 0.0 && self.learning_rate.is_finite(), "learning rate must be positive")
    }
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self::desk()
    }
}

/// One causal convolution. `weights[(o * in_channels + i) * kernel_size + k]`
/// multiplies input channel `i` at time `t - k * dilation` for output channel `o`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvLayer {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel_size: usize,
    pub dilation: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ConvLayer {
    fn zeros(in_channels: usize, out_channels: usize, kernel_size: usize, dilation: usize) -> Self {
        Self {
            in_channels,
            out_channels,
            kernel_size,
            dilation,
            weights: vec![0.0; out_channels * in_channels * kernel_size],
            bias: vec![0.0; out_channels],
        }
    }

    #[inline]
    fn w(&self, o: usize, i: usize, k: usize) -> f64 {
        self.weights[(o * self.in_channels + i) * self.kernel_size + k]
    }

    /// Pre-activations for a `in_channels × t` input.
    fn forward(&self, input: &[Vec<f64>], t: usize) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; t]; self.out_channels];
        for (o, row) in out.iter_mut().enumerate() {
            row.iter_mut().for_each(|v| *v = self.bias[o]);
            for (i, x) in input.iter().enumerate() {
                for k in 0..self.kernel_size {
                    let shift = k * self.dilation;
                    if shift >= t {
                        break;
                    }
                    let w = self.w(o, i, k);
                    for (r, xv) in row[shift..].iter_mut().zip(&x[..t - shift]) {
                        *r += w * xv;
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncoderParams {
    pub convs: Vec<ConvLayer>,
    /// Row-major `latent_dim × out_channels`.
    pub projection: Vec<f64>,
    pub latent_dim: usize,
}

#[inline]
fn leaky(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        LEAKY_SLOPE * z
    }
}

#[inline]
fn leaky_grad(z: f64) -> f64 {
    if z > 0.0 {
        1.0
    } else {
        LEAKY_SLOPE
    }
}

/// Intermediate values kept for the backward pass.
struct Trace {
    /// Input to each convolution.
    inputs: Vec<Vec<Vec<f64>>>,
    /// Pre-activation output of each convolution.
    pre: Vec<Vec<Vec<f64>>>,
    pooled: Vec<f64>,
    argmax: Vec<usize>,
}

impl EncoderParams {
    /// Shapes from `cfg`, all values zero.
    pub fn zeros(cfg: &EncoderConfig) -> Self {
        let mut convs = Vec::with_capacity(cfg.layers + 1);
        for l in 0..cfg.layers {
            let cin = if l == 0 { 1 } else { cfg.channels };
            convs.push(ConvLayer::zeros(cin, cfg.channels, cfg.kernel_size, 1 << l));
        }
        convs.push(ConvLayer::zeros(cfg.channels, cfg.out_channels, cfg.kernel_size, 1 << cfg.layers));
        Self { convs, projection: vec![0.0; cfg.latent_dim * cfg.out_channels], latent_dim: cfg.latent_dim }
    }

    /// Uniform initialization in `±1/sqrt(fan_in)` for weights and biases.
    pub fn init(cfg: &EncoderConfig, rng: &mut ChaCha8Rng) -> Self {
        let mut p = Self::zeros(cfg);
        for conv in &mut p.convs {
            let bound = 1.0 / libm::sqrt((conv.in_channels * conv.kernel_size) as f64);
            conv.weights.iter_mut().for_each(|w| *w = rng.random_range(-bound..bound));
            conv.bias.iter_mut().for_each(|b| *b = rng.random_range(-bound..bound));
        }
        let bound = 1.0 / libm::sqrt(cfg.out_channels as f64);
        p.projection.iter_mut().for_each(|w| *w = rng.random_range(-bound..bound));
        p
    }

    pub fn out_channels(&self) -> usize {
        self.convs.last().map_or(0, |c| c.out_channels)
    }

    /// Parameter buffers in a fixed order: per convolution weights then bias, then projection.
    pub fn buffers(&self) -> Vec<&[f64]> {
        let mut v: Vec<&[f64]> = Vec::with_capacity(2 * self.convs.len() + 1);
        for c in &self.convs {
            v.push(&c.weights);
            v.push(&c.bias);
        }
        v.push(&self.projection);
        v
    }

    pub fn buffers_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v: Vec<&mut [f64]> = Vec::with_capacity(2 * self.convs.len() + 1);
        for c in &mut self.convs {
            v.push(&mut c.weights);
            v.push(&mut c.bias);
        }
        v.push(&mut self.projection);
        v
    }

    pub fn num_params(&self) -> usize {
        self.buffers().iter().map(|b| b.len()).sum()
    }

    /// Flat view of all parameters, in [`buffers`](Self::buffers) order.
    pub fn to_flat(&self) -> Vec<f64> {
        self.buffers().concat()
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        let mut offset = 0;
        for b in self.buffers_mut() {
            b.copy_from_slice(&flat[offset..offset + b.len()]);
            offset += b.len();
        }
    }

    pub fn is_finite(&self) -> bool {
        self.buffers().iter().all(|b| b.iter().all(|v| v.is_finite()))
    }

    fn trace(&self, x: &[f64]) -> Trace {
        let t = x.len();
        let mut inputs = Vec::with_capacity(self.convs.len());
        let mut pre = Vec::with_capacity(self.convs.len());
        let mut h = vec![x.to_vec()];
        for conv in &self.convs {
            let z = conv.forward(&h, t);
            let a: Vec<Vec<f64>> = z.iter().map(|row| row.iter().map(|&v| leaky(v)).collect()).collect();
            inputs.push(h);
            pre.push(z);
            h = a;
        }
        let (pooled, argmax) = h
            .iter()
            .map(|row| {
                let mut best = 0;
                for (i, v) in row.iter().enumerate() {
                    if *v > row[best] {
                        best = i;
                    }
                }
                (row.get(best).copied().unwrap_or(0.0), best)
            })
            .unzip();
        Trace { inputs, pre, pooled, argmax }
    }

    fn project(&self, pooled: &[f64]) -> Vec<f64> {
        let c = pooled.len();
        (0..self.latent_dim).map(|l| dot(&self.projection[l * c..(l + 1) * c], pooled)).collect()
    }

    /// Embeds a series into `latent_dim` values.
    pub fn encode(&self, x: &[f64]) -> Vec<f64> {
        if x.is_empty() {
            return vec![0.0; self.latent_dim];
        }
        self.project(&self.trace(x).pooled)
    }

    /// Activations of the output convolution before pooling (`out_channels × len`).
    pub fn feature_maps(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let trace = self.trace(x);
        let last = trace.pre.last().expect("encoder has at least one convolution");
        last.iter().map(|row| row.iter().map(|&v| leaky(v)).collect()).collect()
    }

    /// Accumulates into `grad` the gradient of `⟨d_embed, encode(x)⟩`.
    fn backward(&self, trace: &Trace, d_embed: &[f64], grad: &mut EncoderParams) {
        let c = trace.pooled.len();
        let t = trace.inputs[0][0].len();
        let mut d_pooled = vec![0.0; c];
        for (l, &g) in d_embed.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            let row = &self.projection[l * c..(l + 1) * c];
            let grow = &mut grad.projection[l * c..(l + 1) * c];
            for ch in 0..c {
                grow[ch] += g * trace.pooled[ch];
                d_pooled[ch] += g * row[ch];
            }
        }
        let mut d_act = vec![vec![0.0; t]; c];
        for ch in 0..c {
            d_act[ch][trace.argmax[ch]] = d_pooled[ch];
        }
        for (li, conv) in self.convs.iter().enumerate().rev() {
            let z = &trace.pre[li];
            let input = &trace.inputs[li];
            let dz: Vec<Vec<f64>> = d_act
                .iter()
                .zip(z)
                .map(|(da, zr)| da.iter().zip(zr).map(|(g, &zv)| g * leaky_grad(zv)).collect())
                .collect();
            let gconv = &mut grad.convs[li];
            let need_input_grad = li > 0;
            let mut d_in = if need_input_grad { vec![vec![0.0; t]; conv.in_channels] } else { Vec::new() };
            for (o, dzo) in dz.iter().enumerate() {
                gconv.bias[o] += dzo.iter().sum::<f64>();
                for (i, x) in input.iter().enumerate() {
                    for k in 0..conv.kernel_size {
                        let shift = k * conv.dilation;
                        if shift >= t {
                            break;
                        }
                        let idx = (o * conv.in_channels + i) * conv.kernel_size + k;
                        gconv.weights[idx] += dot(&dzo[shift..], &x[..t - shift]);
                        if need_input_grad {
                            let w = conv.weights[idx];
                            for (d, g) in d_in[i][..t - shift].iter_mut().zip(&dzo[shift..]) {
                                *d += w * g;
                            }
                        }
                    }
                }
            }
            d_act = d_in;
        }
    }
}

/// An anchor, a positive drawn from inside it, and negatives from other series.
#[derive(Clone, Debug, PartialEq)]
pub struct Triplet {
    pub anchor: Vec<f64>,
    pub positive: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

/// `-log σ(s)` computed without overflow.
fn neg_log_sigmoid(s: f64) -> f64 {
    // softplus(-s)
    let x = -s;
    x.max(0.0) + libm::log1p(libm::exp(-x.abs()))
}

fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + libm::exp(-s))
    } else {
        let e = libm::exp(s);
        e / (1.0 + e)
    }
}

/// Triplet loss from embeddings: `-log σ(⟨a,p⟩) - Σ_k log σ(-⟨a,n_k⟩)`.
pub fn triplet_loss_from_embeddings(anchor: &[f64], positive: &[f64], negatives: &[Vec<f64>]) -> f64 {
    neg_log_sigmoid(dot(anchor, positive)) + negatives.iter().map(|n| neg_log_sigmoid(-dot(anchor, n))).sum::<f64>()
}

pub fn triplet_loss(params: &EncoderParams, triplet: &Triplet) -> f64 {
    let a = params.encode(&triplet.anchor);
    let p = params.encode(&triplet.positive);
    let n: Vec<Vec<f64>> = triplet.negatives.iter().map(|x| params.encode(x)).collect();
    triplet_loss_from_embeddings(&a, &p, &n)
}

/// Summed triplet loss over a batch.
pub fn batch_loss(params: &EncoderParams, batch: &[Triplet]) -> f64 {
    batch.iter().map(|t| triplet_loss(params, t)).sum()
}

/// Summed loss over the batch and its gradient with respect to every parameter.
pub fn grad(params: &EncoderParams, batch: &[Triplet]) -> (f64, EncoderParams) {
    let mut g = params.clone();
    for b in g.buffers_mut() {
        b.iter_mut().for_each(|v| *v = 0.0);
    }
    let mut loss = 0.0;
    for tr in batch {
        let ta = params.trace(&tr.anchor);
        let tp = params.trace(&tr.positive);
        let tn: Vec<Trace> = tr.negatives.iter().map(|x| params.trace(x)).collect();
        let ea = params.project(&ta.pooled);
        let ep = params.project(&tp.pooled);
        let en: Vec<Vec<f64>> = tn.iter().map(|t| params.project(&t.pooled)).collect();
        loss += triplet_loss_from_embeddings(&ea, &ep, &en);

        // d/ds [-log σ(s)] = -σ(-s); d/ds [-log σ(-s)] = σ(s).
        let gp = -sigmoid(-dot(&ea, &ep));
        let mut d_a: Vec<f64> = ep.iter().map(|v| gp * v).collect();
        let d_p: Vec<f64> = ea.iter().map(|v| gp * v).collect();
        params.backward(&tp, &d_p, &mut g);
        for (e, t) in en.iter().zip(&tn) {
            let gn = sigmoid(dot(&ea, e));
            d_a.iter_mut().zip(e).for_each(|(d, v)| *d += gn * v);
            let d_n: Vec<f64> = ea.iter().map(|v| gn * v).collect();
            params.backward(t, &d_n, &mut g);
        }
        params.backward(&ta, &d_a, &mut g);
    }
    (loss, g)
}

/// Draws one triplet. `series` must be non-empty; all entries must be non-empty.
pub fn sample_triplet(series: &[&[f64]], cfg: &EncoderConfig, rng: &mut ChaCha8Rng) -> Triplet {
    let n = series.len();
    let which = rng.random_range(0..n);
    let source = series[which];
    let len = source.len();
    let max_len = cfg.max_subseries.min(len);
    let min_len = cfg.min_subseries.min(max_len);
    let anchor_len = rng.random_range(min_len..=max_len);
    let anchor_start = rng.random_range(0..=len - anchor_len);
    let anchor = &source[anchor_start..anchor_start + anchor_len];
    let pos_len = rng.random_range(min_len..=anchor_len);
    let pos_start = rng.random_range(0..=anchor_len - pos_len);
    let positive = anchor[pos_start..pos_start + pos_len].to_vec();
    let negatives = (0..cfg.negatives)
        .map(|_| {
            let other = if n > 1 {
                let j = rng.random_range(0..n - 1);
                if j >= which {
                    j + 1
                } else {
                    j
                }
            } else {
                which
            };
            let s = series[other];
            let l = pos_len.min(s.len());
            let st = rng.random_range(0..=s.len() - l);
            s[st..st + l].to_vec()
        })
        .collect();
    Triplet { anchor: anchor.to_vec(), positive, negatives }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
    lr: f64,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize, lr: f64) -> Self {
        Self { m: vec![0.0; n], v: vec![0.0; n], step: 0, lr }
    }

    fn update(&mut self, params: &mut [f64], grad: &[f64]) {
        self.step += 1;
        let c1 = 1.0 - libm::pow(Self::BETA1, f64::from(self.step));
        let c2 = 1.0 - libm::pow(Self::BETA2, f64::from(self.step));
        for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = Self::BETA1 * *m + (1.0 - Self::BETA1) * g;
            *v = Self::BETA2 * *v + (1.0 - Self::BETA2) * g * g;
            let mh = *m / c1;
            let vh = *v / c2;
            *p -= self.lr * mh / (libm::sqrt(vh) + Self::EPS);
        }
    }
}

/// Trains an encoder on the given series. Deterministic in `cfg.seed`.
pub fn train_encoder(series: &[&[f64]], cfg: &EncoderConfig) -> Result<EncoderParams> {
    cfg.validate()?;
    if series.is_empty() || series.iter().any(|s| s.is_empty()) {
        return Err(Error::EmptySelection("encoder training needs non-empty series"));
    }
    let mut rng = rng(cfg.seed);
    let mut params = EncoderParams::init(cfg, &mut rng);
    let mut adam = Adam::new(params.num_params(), cfg.learning_rate);
    let mut flat = params.to_flat();
    for _ in 0..cfg.steps {
        let batch: Vec<Triplet> = (0..cfg.batch_size).map(|_| sample_triplet(series, cfg, &mut rng)).collect();
        let (_, g) = grad(&params, &batch);
        let scale = 1.0 / cfg.batch_size as f64;
        let gflat: Vec<f64> = g.to_flat().iter().map(|v| v * scale).collect();
        adam.update(&mut flat, &gflat);
        params.set_flat(&flat);
    }
    Ok(params)
}

/// Sample mean and unbiased covariance of embeddings.
pub fn embedding_moments(embeddings: &[Vec<f64>]) -> Result<(Vec<f64>, crate::linalg::Matrix)> {
    let n = embeddings.len();
    if n < 2 {
        return Err(Error::InsufficientData { what: "embedding covariance", needed: 2, got: n });
    }
    let d = embeddings[0].len();
    let mut mu = vec![0.0; d];
    for e in embeddings {
        mu.iter_mut().zip(e).for_each(|(m, v)| *m += v);
    }
    mu.iter_mut().for_each(|m| *m /= n as f64);
    let mut cov = crate::linalg::Matrix::zeros(d, d);
    for e in embeddings {
        let c: Vec<f64> = e.iter().zip(&mu).map(|(v, m)| v - m).collect();
        for i in 0..d {
            for j in i..d {
                cov[(i, j)] += c[i] * c[j];
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            let v = cov[(i, j)] / (n - 1) as f64;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    Ok((mu, cov))
}
