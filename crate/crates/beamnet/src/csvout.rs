//! CSV emission for sweeps, training traces and evaluation summaries.

use std::path::Path;

use beamnet_core::harness::{EvalReport, LossCell, SweepResult, TrainReport};
use serde::Serialize;

use crate::{Error, Result};

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::format(path, format!("{other:?}")),
    }
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = writer(path)?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct SweepRow<'a> {
    axis: &'a str,
    value: f64,
    mean_se: f64,
    se_ratio: f64,
    top1: f64,
    top5: f64,
    /// NaN marks an undefined gain.
    gain: f64,
    n: usize,
}

/// `axis,value,mean_se,se_ratio,top1,top5,gain,n`
pub fn write_sweep(path: &Path, result: &SweepResult) -> Result<()> {
    write_rows(
        path,
        result.records.iter().map(|r| SweepRow {
            axis: &r.axis,
            value: r.value,
            mean_se: r.mean_se,
            se_ratio: r.se_ratio,
            top1: r.top1,
            top5: r.top5,
            gain: r.gain.unwrap_or(f64::NAN),
            n: r.n,
        }),
    )
}

/// `epoch,train_loss,val_loss,lr`
pub fn write_train(path: &Path, report: &TrainReport) -> Result<()> {
    write_rows(path, report.records())
}

#[derive(Serialize)]
struct MetricRow {
    metric: &'static str,
    value: f64,
    ci_low: Option<f64>,
    ci_high: Option<f64>,
}

/// `metric,value,ci_low,ci_high`
pub fn write_eval(path: &Path, r: &EvalReport, param_count: usize) -> Result<()> {
    let row = |metric, value, ci: Option<(f64, f64)>| MetricRow {
        metric,
        value,
        ci_low: ci.map(|c| c.0),
        ci_high: ci.map(|c| c.1),
    };
    write_rows(
        path,
        [
            row("n", r.n as f64, None),
            row("snr_db", r.snr_db, None),
            row("param_count", param_count as f64, None),
            row("mae", r.mae, None),
            row("rmse", r.rmse, None),
            row("mean_se", r.mean_se, None),
            row("oracle_se", r.oracle_se, None),
            row("se_ratio", r.se_ratio, Some(r.se_ratio_ci)),
            row("top1", r.top1, None),
            row("top5", r.top5, Some(r.top5_ci)),
            row("top5_ranked", r.top5_ranked, None),
        ],
    )
}

#[derive(Serialize)]
struct LossRow<'a> {
    density: &'a str,
    fraction: f64,
    loss: &'static str,
    mae: f64,
    rmse: f64,
    huber: f64,
    worst_decile: f64,
    epochs: usize,
}

/// `density,fraction,loss,mae,rmse,huber,worst_decile,epochs`
pub fn write_losses(path: &Path, cells: &[LossCell]) -> Result<()> {
    write_rows(
        path,
        cells.iter().map(|c| LossRow {
            density: &c.density,
            fraction: c.fraction,
            loss: c.loss.name(),
            mae: c.mae,
            rmse: c.rmse,
            huber: c.huber,
            worst_decile: c.worst_decile,
            epochs: c.epochs,
        }),
    )
}
