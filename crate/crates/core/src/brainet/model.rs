use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::chansim::{NormMeta, FEATURE_CHANNELS};
use crate::exec::Executor;
use crate::rng::{stream, tag};
use crate::tensorkit::{Graph, Tensor, Var};
use crate::{Error, Result};

/// Rows per graph when running inference over a whole dataset.
pub const INFERENCE_CHUNK: usize = 250;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
    pub stride: usize,
}

impl ConvSpec {
    /// Output length with `kernel/2` zero padding on each side.
    pub fn output_length(&self, input: usize) -> usize {
        let padded = input + 2 * (self.kernel / 2);
        if padded < self.kernel {
            0
        } else {
            (padded - self.kernel) / self.stride + 1
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub conv_layers: Vec<ConvSpec>,
    pub d_model: usize,
    pub n_heads: usize,
    pub dense_units: usize,
    pub dropout: f64,
    pub input_length: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let conv = |in_ch, out_ch| ConvSpec {
            in_ch,
            out_ch,
            kernel: 5,
            stride: 2,
        };
        ModelConfig {
            conv_layers: vec![conv(2, 32), conv(32, 64)],
            d_model: 64,
            n_heads: 4,
            dense_units: 44,
            dropout: 0.2,
            input_length: 384,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.conv_layers.is_empty() {
            return bad("at least one conv layer is required".into());
        }
        if self.d_model == 0 || self.n_heads == 0 || self.dense_units == 0 || self.input_length == 0 {
            return bad("d_model, n_heads, dense_units and input_length must be at least 1".into());
        }
        if !self.d_model.is_multiple_of(self.n_heads) {
            return bad(format!("d_model {} is not divisible by n_heads {}", self.d_model, self.n_heads));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if self.conv_layers[0].in_ch != FEATURE_CHANNELS {
            return bad(format!("first conv layer must take {FEATURE_CHANNELS} input channels"));
        }
        for (i, c) in self.conv_layers.iter().enumerate() {
            if c.in_ch == 0 || c.out_ch == 0 || c.kernel == 0 || c.stride == 0 {
                return bad(format!("conv layer {i} has a zero count"));
            }
            if i > 0 && self.conv_layers[i - 1].out_ch != c.in_ch {
                return bad(format!("conv layer {i} input channels do not chain"));
            }
        }
        if self.sequence_length() == 0 {
            return bad("conv stack reduces the sequence to nothing".into());
        }
        Ok(())
    }

    /// Positions entering the attention block.
    pub fn sequence_length(&self) -> usize {
        self.conv_layers
            .iter()
            .fold(self.input_length, |l, c| c.output_length(l))
    }

    pub fn conv_channels(&self) -> usize {
        self.conv_layers.last().map_or(FEATURE_CHANNELS, |c| c.out_ch)
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.n_heads
    }

    /// Shapes of every parameter tensor, with names and L2 eligibility.
    pub fn parameter_layout(&self) -> Vec<(String, Vec<usize>, bool)> {
        let mut out = Vec::new();
        for (i, c) in self.conv_layers.iter().enumerate() {
            out.push((format!("conv{i}.weight"), vec![c.kernel, c.in_ch, c.out_ch], true));
            out.push((format!("conv{i}.bias"), vec![c.out_ch], false));
        }
        let (c, d) = (self.conv_channels(), self.d_model);
        for n in ["query", "key", "value"] {
            out.push((format!("attention.{n}"), vec![c, d], true));
        }
        out.push(("attention.output".into(), vec![d, d], true));
        out.push(("dense.weight".into(), vec![self.sequence_length() * d, self.dense_units], true));
        out.push(("dense.bias".into(), vec![self.dense_units], false));
        out.push(("head.weight".into(), vec![self.dense_units, 1], true));
        out.push(("head.bias".into(), vec![1], false));
        out
    }

    /// Closed-form parameter count.
    pub fn param_count(&self) -> usize {
        let conv: usize = self
            .conv_layers
            .iter()
            .map(|c| c.kernel * c.in_ch * c.out_ch + c.out_ch)
            .sum();
        let (c, d) = (self.conv_channels(), self.d_model);
        conv + 3 * c * d + d * d + (self.sequence_length() * d + 1) * self.dense_units + self.dense_units + 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub names: Vec<String>,
    pub params: Vec<Tensor>,
    /// Whether each parameter receives L2 regularization (weights yes, biases no).
    pub decay: Vec<bool>,
    pub norm_meta: Option<NormMeta>,
}

impl Model {
    pub fn param_count(&self) -> usize {
        self.params.iter().map(Tensor::len).sum()
    }

    pub fn param(&self, name: &str) -> Option<&Tensor> {
        self.names.iter().position(|n| n == name).map(|i| &self.params[i])
    }

    pub fn param_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.names.iter().position(|n| n == name).map(move |i| &mut self.params[i])
    }

    /// Rebuilds a model from stored tensors, checking every shape.
    pub fn from_parts(config: ModelConfig, tensors: Vec<(String, Tensor)>, norm_meta: Option<NormMeta>) -> Result<Model> {
        config.validate()?;
        let layout = config.parameter_layout();
        if layout.len() != tensors.len() {
            return Err(Error::LengthMismatch(layout.len(), tensors.len()));
        }
        let mut model = Model {
            config,
            names: Vec::new(),
            params: Vec::new(),
            decay: Vec::new(),
            norm_meta,
        };
        for ((name, shape, decay), (tname, t)) in layout.into_iter().zip(tensors) {
            if name != tname || shape != t.shape() {
                return Err(Error::dims("checkpoint", &shape, t.shape()));
            }
            model.names.push(name);
            model.params.push(t);
            model.decay.push(decay);
        }
        Ok(model)
    }
}

/// Glorot-uniform weights, zero biases, drawn from the seed's init stream.
pub fn build_model(config: ModelConfig, seed: u64) -> Result<Model> {
    config.validate()?;
    let mut rng = stream(seed, &[tag::INIT]);
    let mut model = Model {
        config: config.clone(),
        names: Vec::new(),
        params: Vec::new(),
        decay: Vec::new(),
        norm_meta: None,
    };
    for (name, shape, decay) in config.parameter_layout() {
        let t = if decay {
            let (fan_in, fan_out) = match shape.len() {
                3 => (shape[0] * shape[1], shape[0] * shape[2]),
                _ => (shape[0], shape[1]),
            };
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let u = Uniform::new_inclusive(-limit, limit).expect("finite limit");
            Tensor::from_fn(&shape, |_| u.sample(&mut rng))
        } else {
            Tensor::zeros(&shape)
        };
        model.names.push(name);
        model.params.push(t);
        model.decay.push(decay);
    }
    Ok(model)
}

/// `[B×2×L]` channel-major rows to the `[B×L×2]` layout the conv stack reads.
pub fn position_major<T: Copy + Into<f64>>(rows: &[T], batch: usize, length: usize) -> Result<Tensor> {
    let w = FEATURE_CHANNELS * length;
    if rows.len() != batch * w {
        return Err(Error::dims("features", &[batch, FEATURE_CHANNELS, length], &[rows.len()]));
    }
    let mut out = vec![0.0; rows.len()];
    for b in 0..batch {
        for ch in 0..FEATURE_CHANNELS {
            for l in 0..length {
                out[(b * length + l) * FEATURE_CHANNELS + ch] = rows[b * w + ch * length + l].into();
            }
        }
    }
    Tensor::new(&[batch, length, FEATURE_CHANNELS], out)
}

pub struct Forward<'p> {
    pub graph: Graph<'p>,
    /// `[B]` predictions.
    pub output: Var,
    /// One leaf per model parameter, in model order.
    pub params: Vec<Var>,
}

/// Builds the forward graph over a position-major `[B×L×2]` input.
pub fn forward_graph<'p, R: Rng + ?Sized>(model: &'p Model, input: Tensor, train: bool, rng: &mut R) -> Result<Forward<'p>> {
    let cfg = &model.config;
    let want = [input.shape().first().copied().unwrap_or(0), cfg.input_length, FEATURE_CHANNELS];
    if input.shape() != want {
        return Err(Error::dims("forward", &want, input.shape()));
    }
    let batch = want[0];
    let mut g = Graph::new();
    let params: Vec<Var> = model.params.iter().map(|p| g.param(p)).collect();
    let mut x = g.constant(input);
    let mut next = 0;
    let mut take = || {
        next += 1;
        params[next - 1]
    };
    for c in &cfg.conv_layers {
        let (w, b) = (take(), take());
        let y = g.conv1d(x, w, c.stride, c.kernel / 2)?;
        let y = g.add_bias(y, b)?;
        x = g.relu(y);
    }
    let (wq, wk, wv, wo) = (take(), take(), take(), take());
    let q = g.matmul(x, wq)?;
    let k = g.matmul(x, wk)?;
    let v = g.matmul(x, wv)?;
    let q = g.split_heads(q, cfg.n_heads)?;
    let k = g.split_heads(k, cfg.n_heads)?;
    let v = g.split_heads(v, cfg.n_heads)?;
    let scores = g.batch_matmul(q, k, true)?;
    let scores = g.scale(scores, 1.0 / (cfg.head_dim() as f64).sqrt());
    let attn = g.softmax(scores);
    let z = g.batch_matmul(attn, v, false)?;
    let z = g.merge_heads(z, cfg.n_heads)?;
    let z = g.matmul(z, wo)?;
    let z = g.dropout(z, cfg.dropout, train, rng)?;
    let flat = g.flatten(z)?;
    let (wd, bd, wr, br) = (take(), take(), take(), take());
    let d = g.matmul(flat, wd)?;
    let d = g.add_bias(d, bd)?;
    let d = g.relu(d);
    let y = g.matmul(d, wr)?;
    let y = g.add_bias(y, br)?;
    let output = g.reshape(y, &[batch])?;
    Ok(Forward {
        graph: g,
        output,
        params,
    })
}

/// Predictions for a `[B×2×L]` channel-major batch.
pub fn forward<R: Rng + ?Sized>(model: &Model, batch: &Tensor, train: bool, rng: &mut R) -> Result<Vec<f64>> {
    let cfg = &model.config;
    let want = [batch.shape().first().copied().unwrap_or(0), FEATURE_CHANNELS, cfg.input_length];
    if batch.shape() != want {
        return Err(Error::dims("forward", &want, batch.shape()));
    }
    let input = position_major(batch.data(), want[0], want[2])?;
    let f = forward_graph(model, input, train, rng)?;
    Ok(f.graph.value(f.output).data().to_vec())
}

/// Inference over `n` stored feature rows in [`INFERENCE_CHUNK`]-row chunks,
/// one chunk per executor task.
pub fn predict<E: Executor>(model: &Model, rows: &[f32], n: usize, exec: &E) -> Result<Vec<f64>> {
    let w = FEATURE_CHANNELS * model.config.input_length;
    if rows.len() != n * w {
        return Err(Error::dims("predict", &[n, w], &[rows.len()]));
    }
    let chunks = n.div_ceil(INFERENCE_CHUNK);
    let parts = exec.map_indexed(chunks, |i| -> Result<Vec<f64>> {
        let start = i * INFERENCE_CHUNK;
        let b = INFERENCE_CHUNK.min(n - start);
        let input = position_major(&rows[start * w..(start + b) * w], b, model.config.input_length)?;
        // Never consumed: dropout is the identity at inference.
        let mut rng = stream(0, &[tag::DROPOUT]);
        let f = forward_graph(model, input, false, &mut rng)?;
        Ok(f.graph.value(f.output).data().to_vec())
    });
    let mut out = Vec::with_capacity(n);
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// Decodes a regression output to a codebook index, rounding halves up and
/// clamping into range. NaN maps to 0.
pub fn predict_beam(y: f64, n_beams: usize) -> usize {
    if n_beams <= 1 {
        return 0;
    }
    let top = (n_beams - 1) as f64;
    let x = (y * top + 0.5).floor();
    if x >= 0.0 {
        x.min(top) as usize
    } else {
        0
    }
}
