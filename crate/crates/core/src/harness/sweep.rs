use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::eval::top_k_hit;
use crate::beamspace::{
    beam_spectral_efficiencies, exhaustive_search, overhead_factor, spectral_efficiency, Codebook, LinkBudget,
    PREDICTOR_PROBES,
};
use crate::brainet::{predict, predict_beam, Model};
use crate::chansim::{aged_channel, generate_samples, Band, Dataset, Kinematics, MacKind, NormMeta, ScenarioConfig};
use crate::exec::Executor;
use crate::{Error, Result};

/// One grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub axis: String,
    pub value: f64,
    pub mean_se: f64,
    pub se_ratio: f64,
    pub top1: f64,
    pub top5: f64,
    /// Beam-training gain; `None` when the exhaustive baseline has no airtime left.
    pub gain: Option<f64>,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: String,
    pub mac: MacKind,
    pub records: Vec<SweepRecord>,
}

impl SweepResult {
    pub fn values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.value).collect()
    }

    pub fn mean_se(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.mean_se).collect()
    }
}

/// Monte-Carlo settings shared by the kinematic sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    pub samples_per_point: usize,
    /// First user index drawn; defaults past the training population.
    pub first_index: usize,
    pub snr_db: f64,
}

impl SweepSettings {
    pub fn for_config(config: &ScenarioConfig) -> Self {
        SweepSettings {
            samples_per_point: 500,
            first_index: config.n_users,
            snr_db: config.label_snr_db,
        }
    }
}

pub fn default_snr_grid() -> Vec<f64> {
    (0..8).map(|i| -5.0 + 5.0 * i as f64).collect()
}

pub fn default_velocity_grid() -> Vec<f64> {
    (0..16).map(|i| 10.0 * i as f64).collect()
}

pub fn default_distance_grid() -> Vec<f64> {
    (1..16).map(|i| 10.0 * i as f64).collect()
}

fn overhead_gain(pred_se: f64, exhaustive_se: f64, n_beams: usize, mac: MacKind) -> Option<f64> {
    let p = mac.profile();
    let den = exhaustive_se * overhead_factor(n_beams, &p);
    (den > 0.0).then(|| pred_se * overhead_factor(PREDICTOR_PROBES, &p) / den)
}

fn require_meta(model: &Model) -> Result<NormMeta> {
    model
        .norm_meta
        .ok_or_else(|| Error::MetaMismatch("model carries no normalization constants".into()))
}

/// Mean SE of the model's beams on `dataset` at every SNR of `grid`, once
/// per MAC profile in `macs` (the profiles differ only in the gain column).
pub fn sweep_snr<E: Executor>(
    model: &Model,
    dataset: &Dataset,
    codebook: &Codebook,
    grid: &[f64],
    macs: &[MacKind],
    exec: &E,
) -> Result<Vec<SweepResult>> {
    let meta = require_meta(model)?;
    if meta != dataset.norm_meta {
        return Err(Error::MetaMismatch("model and dataset normalization differ".into()));
    }
    if grid.is_empty() || dataset.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = dataset.len();
    let raw = predict(model, &dataset.features, n, exec)?;
    let n_beams = codebook.n_beams();
    let beams: Vec<usize> = raw.iter().map(|&y| predict_beam(y, n_beams)).collect();
    let c = dataset.config.mmwave_subcarriers;
    let top1 = (0..n).filter(|&i| beams[i] == dataset.samples[i].oracle_beam).count() as f64 / n as f64;
    let top5 = (0..n)
        .filter(|&i| top_k_hit(raw[i], dataset.samples[i].oracle_beam, n_beams, 5))
        .count() as f64
        / n as f64;
    let mut points = Vec::with_capacity(grid.len());
    for &snr in grid {
        let budget = LinkBudget::from_db(snr, c);
        let per: Vec<Result<(f64, f64)>> = exec.map_indexed(n, |i| {
            let h = &dataset.samples[i].h_mm;
            Ok((
                spectral_efficiency(h, &codebook.beam(beams[i]), &budget)?,
                exhaustive_search(h, codebook, &budget)?.1,
            ))
        });
        let (mut se, mut best) = (0.0, 0.0);
        for r in per {
            let (a, b) = r?;
            se += a;
            best += b;
        }
        points.push((snr, se / n as f64, best / n as f64));
    }
    Ok(macs
        .iter()
        .map(|&mac| SweepResult {
            axis: "snr".into(),
            mac,
            records: points
                .iter()
                .map(|&(snr, se, best)| SweepRecord {
                    axis: "snr".into(),
                    value: snr,
                    mean_se: se,
                    se_ratio: se / best,
                    top1,
                    top5,
                    gain: overhead_gain(se, best, n_beams, mac),
                    n,
                })
                .collect(),
        })
        .collect())
}

struct AgedPoint {
    mean_se: f64,
    oracle_se: f64,
    top1: f64,
    top5: f64,
}

/// Fresh users at one kinematic point, beams predicted from capture-time
/// features and scored on channels aged by the MAC's CSI staleness.
fn aged_point<E: Executor>(
    model: &Model,
    config: &ScenarioConfig,
    codebook: &Codebook,
    settings: &SweepSettings,
    forced: Kinematics,
    exec: &E,
) -> Result<AgedPoint> {
    let meta = require_meta(model)?;
    let n = settings.samples_per_point;
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let start = settings.first_index;
    let generated = generate_samples(config, start..start + n, forced, exec)?;
    let mut rows = Vec::with_capacity(n * 2 * meta.feature_length);
    for g in &generated {
        rows.extend(meta.apply(&g.raw_features));
    }
    let raw = predict(model, &rows, n, exec)?;
    let n_beams = codebook.n_beams();
    let budget = LinkBudget::from_db(settings.snr_db, config.mmwave_subcarriers);
    let staleness = config.mac_profile().csi_staleness;
    let per: Vec<Result<(f64, f64, bool, bool)>> = exec.map_indexed(n, |i| {
        let h = aged_channel(&generated[i].geometry, Band::MmWave, config, staleness)?;
        let se = beam_spectral_efficiencies(&h, codebook, &budget)?;
        let (best_idx, best) = crate::beamspace::argmax(&se);
        let beam = predict_beam(raw[i], n_beams);
        Ok((se[beam], best, beam == best_idx, top_k_hit(raw[i], best_idx, n_beams, 5)))
    });
    let mut p = AgedPoint {
        mean_se: 0.0,
        oracle_se: 0.0,
        top1: 0.0,
        top5: 0.0,
    };
    for r in per {
        let (se, best, h1, h5) = r?;
        p.mean_se += se;
        p.oracle_se += best;
        p.top1 += h1 as u8 as f64;
        p.top5 += h5 as u8 as f64;
    }
    let nf = n as f64;
    p.mean_se /= nf;
    p.oracle_se /= nf;
    p.top1 /= nf;
    p.top5 /= nf;
    Ok(p)
}

/// SE surface over velocity and distance with CSI aging and airtime overhead.
///
/// `None` for a grid draws that quantity per user. Every grid point reuses
/// the same user indices so differences between points come only from the
/// forced kinematics. `mean_se` is the predictor's overhead-adjusted SE
/// (16 probes); `gain` compares it with exhaustive search charged every beam.
pub fn sweep_velocity_distance<E: Executor>(
    model: &Model,
    config: &ScenarioConfig,
    codebook: &Codebook,
    grid_v: Option<&[f64]>,
    grid_d: Option<&[f64]>,
    settings: &SweepSettings,
    exec: &E,
) -> Result<SweepResult> {
    let vs: Vec<Option<f64>> = grid_v.map_or_else(|| alloc::vec![None], |g| g.iter().map(|&v| Some(v)).collect());
    let ds: Vec<Option<f64>> = grid_d.map_or_else(|| alloc::vec![None], |g| g.iter().map(|&d| Some(d)).collect());
    if vs.is_empty() || ds.is_empty() {
        return Err(Error::EmptyInput);
    }
    let axis: String = match (grid_v.is_some(), grid_d.is_some()) {
        (true, false) => "velocity".into(),
        (false, true) => "distance".into(),
        _ => "velocity".into(),
    };
    let mac = config.mac;
    let profile = config.mac_profile();
    let mut records = Vec::new();
    for &v in &vs {
        for &d in &ds {
            let forced = Kinematics {
                velocity_kmh: v,
                distance_m: d,
            };
            let p = aged_point(model, config, codebook, settings, forced, exec)?;
            let (label, value) = match (v, d, grid_v.is_some() && grid_d.is_some()) {
                (Some(v), Some(d), true) => (format!("velocity@distance={d}"), v),
                (Some(v), _, _) => (axis.clone(), v),
                (None, Some(d), _) => (axis.clone(), d),
                (None, None, _) => (axis.clone(), f64::NAN),
            };
            records.push(SweepRecord {
                axis: label,
                value,
                mean_se: p.mean_se * overhead_factor(PREDICTOR_PROBES, &profile),
                se_ratio: p.mean_se / p.oracle_se,
                top1: p.top1,
                top5: p.top5,
                gain: overhead_gain(p.mean_se, p.oracle_se, codebook.n_beams(), mac),
                n: settings.samples_per_point,
            });
        }
    }
    Ok(SweepResult { axis, mac, records })
}

/// Raw SE of the predicted beam on aged channels across velocity, distance
/// drawn per user; `value` is the velocity in km/h.
pub fn sweep_doppler<E: Executor>(
    model: &Model,
    config: &ScenarioConfig,
    codebook: &Codebook,
    grid_v: &[f64],
    settings: &SweepSettings,
    exec: &E,
) -> Result<SweepResult> {
    if grid_v.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut records = Vec::with_capacity(grid_v.len());
    for &v in grid_v {
        let forced = Kinematics {
            velocity_kmh: Some(v),
            distance_m: None,
        };
        let p = aged_point(model, config, codebook, settings, forced, exec)?;
        records.push(SweepRecord {
            axis: "doppler".into(),
            value: v,
            mean_se: p.mean_se,
            se_ratio: p.mean_se / p.oracle_se,
            top1: p.top1,
            top5: p.top5,
            gain: overhead_gain(p.mean_se, p.oracle_se, codebook.n_beams(), config.mac),
            n: settings.samples_per_point,
        });
    }
    Ok(SweepResult {
        axis: "doppler".into(),
        mac: config.mac,
        records,
    })
}
