use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::flush;
use super::tensor::Tensor;
use crate::{Error, Result};

/// Adam moments and hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub step: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub l2_lambda: f64,
}

impl OptimizerState {
    pub fn new(params: &[Tensor], learning_rate: f64) -> Self {
        OptimizerState {
            m: params.iter().map(|p| vec![0.0; p.len()]).collect(),
            v: params.iter().map(|p| vec![0.0; p.len()]).collect(),
            step: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            l2_lambda: 1e-4,
        }
    }
}

/// One bias-corrected Adam update.
///
/// `decay[i]` selects whether parameter `i` receives the L2 term
/// `l2_lambda·w`, added to its gradient before the moment updates.
pub fn adam_step(params: &mut [Tensor], grads: &[Vec<f64>], decay: &[bool], state: &mut OptimizerState) -> Result<()> {
    if grads.len() != params.len() || decay.len() != params.len() || state.m.len() != params.len() {
        return Err(Error::LengthMismatch(params.len(), grads.len()));
    }
    for (i, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.len() != g.len() || state.m[i].len() != p.len() {
            return Err(Error::dims("adam_step", p.shape(), &[g.len()]));
        }
        if let Some(j) = g.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFiniteGradient(format!("parameter {i}, element {j}")));
        }
    }
    state.step += 1;
    let t = state.step as f64;
    let (b1, b2) = (state.beta1, state.beta2);
    let c1 = 1.0 - b1.powf(t);
    let c2 = 1.0 - b2.powf(t);
    for (i, p) in params.iter_mut().enumerate() {
        let lambda = if decay[i] { state.l2_lambda } else { 0.0 };
        let (m, v) = (&mut state.m[i], &mut state.v[i]);
        for (j, w) in p.data_mut().iter_mut().enumerate() {
            let g = grads[i][j] + lambda * *w;
            // Moments of parameters without gradient decay geometrically.
            m[j] = flush(b1 * m[j] + (1.0 - b1) * g);
            v[j] = flush(b2 * v[j] + (1.0 - b2) * g * g);
            let mh = m[j] / c1;
            let vh = v[j] / c2;
            *w -= state.learning_rate * mh / (vh.sqrt() + state.epsilon);
        }
    }
    Ok(())
}
