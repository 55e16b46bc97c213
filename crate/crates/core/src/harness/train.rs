#[allow(unused_imports)]
use num_traits::Float;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::brainet::{forward_graph, position_major, predict, Model};
use crate::exec::Executor;
use crate::chansim::Dataset;
use crate::rng::{stream, tag};
use crate::tensorkit::{adam_step, early_stop, mae, rmse, scheduler_step, LossKind, OptimizerState, SchedulerState, Tensor};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHyper {
    pub epochs: usize,
    pub batch_size: usize,
    pub train_fraction: f64,
    pub learning_rate: f64,
    pub l2_lambda: f64,
    pub loss: LossKind,
    pub lr_patience: usize,
    pub lr_factor: f64,
    pub min_lr: f64,
    pub early_stop_patience: usize,
    /// Fraction of the training split actually used (leading rows).
    pub data_fraction: f64,
    pub seed: u64,
}

impl Default for TrainHyper {
    fn default() -> Self {
        TrainHyper {
            epochs: 500,
            batch_size: 100,
            train_fraction: 0.8,
            learning_rate: 1e-3,
            l2_lambda: 1e-4,
            loss: LossKind::huber(),
            lr_patience: 10,
            lr_factor: 0.5,
            min_lr: 1e-4,
            early_stop_patience: 35,
            data_fraction: 1.0,
            seed: 0,
        }
    }
}

impl TrainHyper {
    pub fn validate(&self) -> Result<()> {
        let ok = self.batch_size >= 1
            && self.train_fraction > 0.0
            && self.train_fraction < 1.0
            && self.learning_rate >= 0.0
            && self.l2_lambda >= 0.0
            && self.data_fraction > 0.0
            && self.data_fraction <= 1.0
            && self.lr_factor > 0.0
            && self.lr_factor <= 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid training hyperparameters {self:?}")))
        }
    }
}

/// Monotonic seconds source; the core has no clock of its own.
pub trait Clock {
    fn seconds(&self) -> f64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn seconds(&self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    /// Learning rate used during each epoch.
    pub lr: Vec<f64>,
    pub stopped_epoch: usize,
    /// 1-based epoch whose weights were restored; 0 when no epoch ran.
    pub best_epoch: usize,
    pub best_val_loss: f64,
    /// Validation loss of the restored weights.
    pub restored_val_loss: f64,
    pub final_mae: f64,
    pub final_rmse: f64,
    pub wall_clock_s: f64,
    pub train_rows: usize,
    pub val_rows: usize,
}

impl TrainReport {
    pub fn records(&self) -> Vec<EpochRecord> {
        (0..self.stopped_epoch)
            .map(|i| EpochRecord {
                epoch: i + 1,
                train_loss: self.train_loss[i],
                val_loss: self.val_loss[i],
                lr: self.lr[i],
            })
            .collect()
    }
}

fn rows_of(dataset: &Dataset, rows: &[usize]) -> (Vec<f32>, Vec<f64>) {
    let w = dataset.row_len();
    let mut x = Vec::with_capacity(rows.len() * w);
    let mut y = Vec::with_capacity(rows.len());
    for &r in rows {
        x.extend_from_slice(dataset.feature_row(r));
        y.push(dataset.targets[r] as f64);
    }
    (x, y)
}

fn targets(dataset: &Dataset, rows: Range<usize>) -> Vec<f64> {
    dataset.targets[rows].iter().map(|&t| t as f64).collect()
}

fn val_predictions<E: Executor>(model: &Model, dataset: &Dataset, rows: Range<usize>, exec: &E) -> Result<Vec<f64>> {
    let w = dataset.row_len();
    predict(model, &dataset.features[rows.start * w..rows.end * w], rows.len(), exec)
}

/// Rows per gradient shard. A batch is split into fixed shards whose gradients
/// are summed in shard order, so results do not depend on the executor.
pub const GRAD_SHARD: usize = 25;

struct Step {
    epoch: usize,
    batch: usize,
    seed: u64,
    loss: LossKind,
}

/// Loss and parameter gradients of one mini-batch.
fn batch_gradients<E: Executor>(
    model: &Model,
    dataset: &Dataset,
    rows: &[usize],
    step: &Step,
    exec: &E,
) -> Result<(f64, Vec<Vec<f64>>)> {
    let n = rows.len() as f64;
    let length = model.config.input_length;
    let shards: Vec<&[usize]> = rows.chunks(GRAD_SHARD).collect();
    // RMSE does not split over shards; shards return mean squared error and
    // the chain rule through the square root is applied after summing.
    let parts = exec.map_indexed(shards.len(), |s| -> Result<(f64, Vec<Vec<f64>>)> {
        let (x, y) = rows_of(dataset, shards[s]);
        let input = position_major(&x, shards[s].len(), length)?;
        let tags = [tag::DROPOUT, step.epoch as u64, step.batch as u64, s as u64];
        let mut rng = stream(step.seed, &tags);
        let mut f = forward_graph(model, input, true, &mut rng)?;
        let loss = match step.loss {
            LossKind::Rmse => {
                let neg = Tensor::new(&[y.len()], y.iter().map(|v| -v).collect())?;
                let neg = f.graph.constant(neg);
                let d = f.graph.add(f.output, neg)?;
                let sq = f.graph.mul(d, d)?;
                f.graph.mean(sq)
            }
            kind => f.graph.loss(f.output, &y, kind)?,
        };
        let value = f.graph.value(loss).data()[0];
        let g = f.graph.backward(loss)?;
        let grads = f.params.iter().zip(&model.params).map(|(&v, p)| g.get_or_zeros(v, p.len())).collect();
        Ok((value, grads))
    });
    let mut total = 0.0;
    let mut grads: Vec<Vec<f64>> = model.params.iter().map(|p| vec![0.0; p.len()]).collect();
    let mut weights = Vec::with_capacity(parts.len());
    let mut shard_grads = Vec::with_capacity(parts.len());
    for (s, part) in parts.into_iter().enumerate() {
        let (value, g) = part?;
        let w = shards[s].len() as f64 / n;
        total += w * value;
        weights.push(w);
        shard_grads.push(g);
    }
    let outer = match step.loss {
        LossKind::Rmse => {
            total = total.sqrt();
            if total > 0.0 {
                0.5 / total
            } else {
                0.0
            }
        }
        _ => 1.0,
    };
    if !total.is_finite() {
        return Err(Error::NonFiniteLoss {
            epoch: step.epoch,
            batch: step.batch,
        });
    }
    for (w, g) in weights.iter().zip(shard_grads) {
        for (acc, part) in grads.iter_mut().zip(g) {
            for (a, b) in acc.iter_mut().zip(part) {
                *a += outer * w * b;
            }
        }
    }
    Ok((total, grads))
}

/// Mini-batch Adam on the configured loss with plateau scheduling, early
/// stopping and best-weight restoration.
///
/// The first `train_fraction` of rows train, the rest validate. `observer`
/// sees every finished epoch.
pub fn train<E: Executor, C: Clock, O: FnMut(&EpochRecord)>(
    model: &mut Model,
    dataset: &Dataset,
    hyper: &TrainHyper,
    exec: &E,
    clock: &C,
    mut observer: O,
) -> Result<TrainReport> {
    hyper.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if dataset.norm_meta.feature_length != model.config.input_length {
        return Err(Error::MetaMismatch(format!(
            "dataset feature length {} but model expects {}",
            dataset.norm_meta.feature_length, model.config.input_length
        )));
    }
    let start = clock.seconds();
    let (train_rows, val_rows) = dataset.split(hyper.train_fraction);
    let n_train = ((train_rows.len() as f64 * hyper.data_fraction).round() as usize).min(train_rows.len());
    if n_train == 0 || val_rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if hyper.batch_size > n_train {
        return Err(Error::Config(format!("batch {} exceeds {} training rows", hyper.batch_size, n_train)));
    }
    model.norm_meta = Some(dataset.norm_meta);
    let val_target = targets(dataset, val_rows.clone());
    let mut opt = OptimizerState::new(&model.params, hyper.learning_rate);
    opt.l2_lambda = hyper.l2_lambda;
    let mut sched = SchedulerState::new(hyper.learning_rate);
    sched.patience = hyper.lr_patience;
    sched.factor = hyper.lr_factor;
    sched.min_lr = hyper.min_lr.min(hyper.learning_rate);

    let mut report = TrainReport {
        train_loss: Vec::new(),
        val_loss: Vec::new(),
        lr: Vec::new(),
        stopped_epoch: 0,
        best_epoch: 0,
        best_val_loss: f64::INFINITY,
        restored_val_loss: f64::NAN,
        final_mae: f64::NAN,
        final_rmse: f64::NAN,
        wall_clock_s: 0.0,
        train_rows: n_train,
        val_rows: val_rows.len(),
    };
    let mut best_params = model.params.clone();
    let mut order: Vec<usize> = (0..n_train).collect();

    for epoch in 0..hyper.epochs {
        let lr = sched.learning_rate;
        opt.learning_rate = lr;
        order.sort_unstable();
        order.shuffle(&mut stream(hyper.seed, &[tag::SHUFFLE, epoch as u64]));
        let mut loss_sum = 0.0;
        for (bi, batch) in order.chunks(hyper.batch_size).enumerate() {
            let step = Step {
                epoch,
                batch: bi,
                seed: hyper.seed,
                loss: hyper.loss,
            };
            let (value, grads) = batch_gradients(model, dataset, batch, &step, exec)?;
            loss_sum += value * batch.len() as f64;
            adam_step(&mut model.params, &grads, &model.decay, &mut opt)?;
        }
        let train_loss = loss_sum / n_train as f64;
        let pred = val_predictions(model, dataset, val_rows.clone(), exec)?;
        let val_loss = hyper.loss.eval(&pred, &val_target)?;
        if !val_loss.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch,
                batch: usize::MAX,
            });
        }
        if val_loss < report.best_val_loss {
            report.best_val_loss = val_loss;
            report.best_epoch = epoch + 1;
            best_params.clone_from(&model.params);
        }
        report.train_loss.push(train_loss);
        report.val_loss.push(val_loss);
        report.lr.push(lr);
        report.stopped_epoch = epoch + 1;
        observer(&EpochRecord {
            epoch: epoch + 1,
            train_loss,
            val_loss,
            lr,
        });
        scheduler_step(&mut sched, val_loss);
        if early_stop(&report.val_loss, hyper.early_stop_patience) {
            break;
        }
    }
    if report.stopped_epoch > 0 {
        model.params = best_params;
    }
    let pred = val_predictions(model, dataset, val_rows, exec)?;
    report.restored_val_loss = hyper.loss.eval(&pred, &val_target)?;
    report.final_mae = mae(&pred, &val_target)?;
    report.final_rmse = rmse(&pred, &val_target)?;
    report.wall_clock_s = clock.seconds() - start;
    Ok(report)
}
