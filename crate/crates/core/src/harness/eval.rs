use alloc::format;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::beamspace::{argmax, beam_spectral_efficiencies, Codebook, LinkBudget};
use crate::brainet::{predict, predict_beam, Model};
use crate::chansim::Dataset;
use crate::exec::Executor;
use crate::tensorkit::{mae, rmse};
use crate::{Error, Result};

const BOOTSTRAP_RESAMPLES: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    pub snr_db: f64,
    pub mae: f64,
    pub rmse: f64,
    /// Mean SE of the predicted beams, bits/s/Hz.
    pub mean_se: f64,
    /// Mean SE of exhaustive search at the same SNR.
    pub oracle_se: f64,
    /// `mean_se / oracle_se`.
    pub se_ratio: f64,
    pub top1: f64,
    pub top5: f64,
    /// Fraction of samples whose predicted beam is among the 5 highest-SE
    /// beams of the channel, whatever their indices.
    pub top5_ranked: f64,
    pub se_ratio_ci: (f64, f64),
    pub top5_ci: (f64, f64),
    pub predicted: Vec<usize>,
    /// Per-sample SE of the predicted beam.
    pub sample_se: Vec<f64>,
    /// Per-sample exhaustive-search SE.
    pub sample_oracle_se: Vec<f64>,
}

/// Whether `oracle` is among the `k` codebook indices closest to the
/// regression output, ties resolved toward the lower index.
///
/// The window of the `k` nearest integers to `y·(n−1)` is clamped to the
/// codebook, so it always holds `min(k, n)` indices.
pub fn top_k_hit(y: f64, oracle: usize, n_beams: usize, k: usize) -> bool {
    if k == 0 || n_beams == 0 {
        return false;
    }
    let k = k.min(n_beams);
    let centre = predict_beam(y, n_beams) as isize;
    let top = n_beams as isize - 1;
    let pos = if y.is_finite() { y * top as f64 } else { 0.0 };
    // Extra index on the side that the continuous output leans toward.
    let lean_low = pos < centre as f64;
    let half = (k as isize - 1) / 2;
    let mut lo = centre - half;
    if k.is_multiple_of(2) && lean_low {
        lo -= 1;
    }
    lo = lo.clamp(0, top + 1 - k as isize);
    let hi = lo + k as isize - 1;
    (lo..=hi).contains(&(oracle as isize))
}

/// Scores `model` on every row of `dataset` at `budget`.
///
/// SE is computed on the stored mm-wave channels. Each user is attached to
/// one serving base station, so the best-over-base-stations selection has a
/// single candidate per sample.
pub fn evaluate<E: Executor>(
    model: &Model,
    dataset: &Dataset,
    codebook: &Codebook,
    budget: &LinkBudget,
    seed: u64,
    exec: &E,
) -> Result<EvalReport> {
    match model.norm_meta {
        Some(m) if m == dataset.norm_meta => {}
        other => {
            return Err(Error::MetaMismatch(format!(
                "model normalization {other:?} differs from dataset {:?}",
                dataset.norm_meta
            )))
        }
    }
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = dataset.len();
    let raw = predict(model, &dataset.features, n, exec)?;
    let target: Vec<f64> = dataset.targets.iter().map(|&t| t as f64).collect();
    let n_beams = codebook.n_beams();
    let predicted: Vec<usize> = raw.iter().map(|&y| predict_beam(y, n_beams)).collect();
    let scored: Vec<Result<(f64, f64, bool)>> = exec.map_indexed(n, |i| {
        let all = beam_spectral_efficiencies(&dataset.samples[i].h_mm, codebook, budget)?;
        let (_, best) = argmax(&all);
        let se = all[predicted[i]];
        let better = all.iter().filter(|&&v| v > se).count();
        Ok((se, best, better < 5))
    });
    let mut sample_se = Vec::with_capacity(n);
    let mut sample_oracle_se = Vec::with_capacity(n);
    let mut ranked = Vec::with_capacity(n);
    for r in scored {
        let (a, b, hit) = r?;
        sample_se.push(a);
        sample_oracle_se.push(b);
        ranked.push(hit);
    }
    let hits1: Vec<bool> = (0..n).map(|i| predicted[i] == dataset.samples[i].oracle_beam).collect();
    let hits5: Vec<bool> = (0..n)
        .map(|i| top_k_hit(raw[i], dataset.samples[i].oracle_beam, n_beams, 5))
        .collect();
    let frac = |h: &[bool], idx: &[usize]| idx.iter().filter(|&&i| h[i]).count() as f64 / idx.len() as f64;
    let ratio = |idx: &[usize]| {
        let num: f64 = idx.iter().map(|&i| sample_se[i]).sum();
        let den: f64 = idx.iter().map(|&i| sample_oracle_se[i]).sum();
        num / den
    };
    let all: Vec<usize> = (0..n).collect();
    let mean_se = sample_se.iter().sum::<f64>() / n as f64;
    let oracle_se = sample_oracle_se.iter().sum::<f64>() / n as f64;
    Ok(EvalReport {
        n,
        snr_db: budget.snr_db,
        mae: mae(&raw, &target)?,
        rmse: rmse(&raw, &target)?,
        mean_se,
        oracle_se,
        se_ratio: mean_se / oracle_se,
        top1: frac(&hits1, &all),
        top5: frac(&hits5, &all),
        top5_ranked: frac(&ranked, &all),
        se_ratio_ci: super::bootstrap_ci(n, BOOTSTRAP_RESAMPLES, 0.95, seed, ratio),
        top5_ci: super::bootstrap_ci(n, BOOTSTRAP_RESAMPLES, 0.95, seed, |idx| frac(&hits5, idx)),
        predicted,
        sample_se,
        sample_oracle_se,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn top_k_window() {
        // y·511 = 100 → window 98..=102
        let y = 100.0 / 511.0;
        assert!(top_k_hit(y, 98, 512, 5) && top_k_hit(y, 102, 512, 5));
        assert!(!top_k_hit(y, 97, 512, 5) && !top_k_hit(y, 103, 512, 5));
        // clamped at the edges
        assert!(top_k_hit(-1.0, 4, 512, 5) && !top_k_hit(-1.0, 5, 512, 5));
        assert!(top_k_hit(2.0, 507, 512, 5));
        assert!(top_k_hit(y, 100, 512, 1) && !top_k_hit(y, 101, 512, 1));
    }
}
