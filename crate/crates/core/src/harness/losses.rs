#[allow(unused_imports)]
use num_traits::Float;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::train::{train, Clock, TrainHyper};
use crate::brainet::{build_model, predict, ModelConfig};
use crate::chansim::Dataset;
use crate::exec::Executor;
use crate::tensorkit::{huber_loss, mae, rmse, LossKind, HUBER_DELTA};
use crate::Result;

/// A named user-density variant of the training data.
#[derive(Debug, Clone, Copy)]
pub struct LossDensity<'a> {
    pub label: &'a str,
    pub dataset: &'a Dataset,
}

/// Held-out metrics of one model trained with one loss on one data fraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossCell {
    pub density: String,
    pub fraction: f64,
    pub loss: LossKind,
    pub mae: f64,
    pub rmse: f64,
    pub huber: f64,
    /// 90th percentile of the absolute validation error.
    pub worst_decile: f64,
    pub epochs: usize,
}

/// Trains one model per (density, fraction, loss) cell from a common seed and
/// reports every metric on the untouched validation split.
pub fn compare_losses<E: Executor, C: Clock>(
    densities: &[LossDensity<'_>],
    losses: &[LossKind],
    fractions: &[f64],
    hyper: &TrainHyper,
    model_config: &ModelConfig,
    exec: &E,
    clock: &C,
) -> Result<Vec<LossCell>> {
    let mut cells = Vec::new();
    for &fraction in fractions {
        for d in densities {
            for &loss in losses {
                let mut h = hyper.clone();
                h.loss = loss;
                h.data_fraction = fraction;
                let mut model = build_model(model_config.clone(), hyper.seed)?;
                let report = train(&mut model, d.dataset, &h, exec, clock, |_| {})?;
                let (_, val) = d.dataset.split(h.train_fraction);
                let w = d.dataset.row_len();
                let pred = predict(&model, &d.dataset.features[val.start * w..val.end * w], val.len(), exec)?;
                let target: Vec<f64> = d.dataset.targets[val].iter().map(|&t| t as f64).collect();
                let mut err: Vec<f64> = pred.iter().zip(&target).map(|(p, t)| (p - t).abs()).collect();
                err.sort_by(f64::total_cmp);
                let q = ((0.9 * (err.len() - 1) as f64).round() as usize).min(err.len() - 1);
                cells.push(LossCell {
                    density: d.label.into(),
                    fraction,
                    loss,
                    mae: mae(&pred, &target)?,
                    rmse: rmse(&pred, &target)?,
                    huber: huber_loss(&pred, &target, HUBER_DELTA)?,
                    worst_decile: err[q],
                    epochs: report.stopped_epoch,
                });
            }
        }
    }
    Ok(cells)
}
