#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const HUBER_DELTA: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Huber { delta: f64 },
    Mae,
    Rmse,
}

impl LossKind {
    pub fn huber() -> Self {
        LossKind::Huber { delta: HUBER_DELTA }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LossKind::Huber { .. } => "huber",
            LossKind::Mae => "mae",
            LossKind::Rmse => "rmse",
        }
    }

    pub fn eval(&self, pred: &[f64], target: &[f64]) -> Result<f64> {
        match *self {
            LossKind::Huber { delta } => huber_loss(pred, target, delta),
            LossKind::Mae => mae(pred, target),
            LossKind::Rmse => rmse(pred, target),
        }
    }

    /// ∂loss/∂pred for each element; `value` is the already computed loss.
    pub(crate) fn grad(&self, pred: &[f64], target: &[f64], value: f64, out: &mut [f64], scale: f64) {
        let n = pred.len() as f64;
        for ((o, p), t) in out.iter_mut().zip(pred).zip(target) {
            let x = p - t;
            let d = match *self {
                LossKind::Huber { delta } => {
                    if x.abs() <= delta {
                        x
                    } else {
                        delta * x.signum()
                    }
                }
                LossKind::Mae => {
                    if x == 0.0 {
                        0.0
                    } else {
                        x.signum()
                    }
                }
                LossKind::Rmse => {
                    if value == 0.0 {
                        0.0
                    } else {
                        x / value
                    }
                }
            };
            *o += scale * d / n;
        }
    }
}

fn check(pred: &[f64], target: &[f64]) -> Result<()> {
    if pred.len() != target.len() {
        return Err(Error::LengthMismatch(pred.len(), target.len()));
    }
    if pred.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

/// Mean Huber penalty: ½x² inside the knee, δ(|x| − ½δ) outside.
pub fn huber_loss(pred: &[f64], target: &[f64], delta: f64) -> Result<f64> {
    check(pred, target)?;
    if !(delta > 0.0) {
        return Err(Error::Config("huber delta must be positive".into()));
    }
    let s: f64 = pred
        .iter()
        .zip(target)
        .map(|(p, t)| {
            let a = (t - p).abs();
            if a <= delta {
                0.5 * a * a
            } else {
                delta * (a - 0.5 * delta)
            }
        })
        .sum();
    Ok(s / pred.len() as f64)
}

pub fn mae(pred: &[f64], target: &[f64]) -> Result<f64> {
    check(pred, target)?;
    Ok(pred.iter().zip(target).map(|(p, t)| (t - p).abs()).sum::<f64>() / pred.len() as f64)
}

pub fn rmse(pred: &[f64], target: &[f64]) -> Result<f64> {
    check(pred, target)?;
    let ms = pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / pred.len() as f64;
    Ok(ms.sqrt())
}
