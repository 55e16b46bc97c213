use alloc::format;
use alloc::vec::Vec;
use core::ops::Range;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::channel::synthesize_channel;
use super::config::{ScenarioConfig, PROBE_BEAMS, PROBE_SUBCARRIERS};
use super::geometry::{sample_geometry_at, Band, Geometry, Kinematics};
use crate::beamspace::{build_codebook, effective_channel, exhaustive_search, Codebook, LinkBudget};
use crate::exec::Executor;
use crate::linalg::{CMatrix, C64};
use crate::{Error, Result};

/// Real-valued feature channels: real part, imaginary part.
pub const FEATURE_CHANNELS: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSample {
    /// `[sub-6 elements × sub-6 subcarriers]`, stored at f32 precision.
    pub h_sub6: CMatrix,
    /// `[mm-wave elements × mm-wave subcarriers]`, stored at f32 precision.
    pub h_mm: CMatrix,
    pub bs_index: usize,
    pub user_position: [f64; 2],
    pub velocity_kmh: f64,
    pub heading: f64,
    pub los: bool,
    /// mm-wave Doppler shift of each path, Hz.
    pub doppler_hz: Vec<f64>,
    pub oracle_beam: usize,
    pub oracle_se: f64,
    pub seed: u64,
}

/// Scaling constants shared by training and inference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormMeta {
    /// Raw features are divided by this max-abs value.
    pub feature_scale: f64,
    pub n_beams: usize,
    pub feature_length: usize,
}

impl NormMeta {
    pub fn target(&self, beam: usize) -> f64 {
        if self.n_beams <= 1 {
            0.0
        } else {
            beam as f64 / (self.n_beams - 1) as f64
        }
    }

    /// Scales raw features for inference, clamping into [−1, 1].
    pub fn apply(&self, raw: &[f64]) -> Vec<f32> {
        raw.iter()
            .map(|&x| (x / self.feature_scale).clamp(-1.0, 1.0) as f32)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<ChannelSample>,
    /// Row-major `[N × 2 × feature_length]`.
    pub features: Vec<f32>,
    /// Oracle beam index scaled to [0, 1].
    pub targets: Vec<f32>,
    pub norm_meta: NormMeta,
    pub config: ScenarioConfig,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn row_len(&self) -> usize {
        FEATURE_CHANNELS * self.norm_meta.feature_length
    }

    pub fn feature_row(&self, i: usize) -> &[f32] {
        let w = self.row_len();
        &self.features[i * w..(i + 1) * w]
    }

    /// Leading `train_fraction` of rows for training, the remainder held out.
    pub fn split(&self, train_fraction: f64) -> (Range<usize>, Range<usize>) {
        split_rows(self.len(), train_fraction)
    }

    /// Copy restricted to `rows`, keeping the normalization constants.
    pub fn subset(&self, rows: Range<usize>) -> Dataset {
        let w = self.row_len();
        Dataset {
            samples: self.samples[rows.clone()].to_vec(),
            features: self.features[rows.start * w..rows.end * w].to_vec(),
            targets: self.targets[rows].to_vec(),
            norm_meta: self.norm_meta,
            config: self.config.clone(),
        }
    }
}

pub(crate) fn split_rows(n: usize, train_fraction: f64) -> (Range<usize>, Range<usize>) {
    let cut = ((n as f64 * train_fraction).round() as usize).min(n);
    (0..cut, cut..n)
}

/// Beam indices of the partial-CSI probes: every `n_az/16`-th azimuth beam,
/// offset by half a stride, in the broadside elevation row.
pub fn probe_beams(codebook: &Codebook) -> Vec<usize> {
    let stride = codebook.n_azimuth() / PROBE_BEAMS;
    let row = codebook.n_elevation() / 2;
    (0..PROBE_BEAMS)
        .map(|p| codebook.index(row, p * stride + stride / 2))
        .collect()
}

fn rms(block: &[C64]) -> f64 {
    (block.iter().map(|z| z.norm_sqr()).sum::<f64>() / block.len() as f64).sqrt()
}

/// Multiplies `block` by `reference.conj()/|reference|` (a common phase
/// rotation making the reference sum real-positive) and divides it by
/// `scale`. A zero reference skips the rotation.
fn normalize_block(block: &mut [C64], reference: C64, scale: f64) {
    let rot = if reference.norm() > 0.0 {
        reference.conj() / reference.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    for z in block.iter_mut() {
        *z = *z * rot / scale;
    }
}

/// Raw (pre-scaling) feature row `[2 × L]`, channel-major.
///
/// Positions `0..E·C_sub` hold the sub-6 CSI subcarrier-major (`c·E + e`); the
/// rest hold probe pilots subcarrier-major (`c·16 + p`) on the first 8 mm-wave
/// subcarriers, divided by √(mm-wave elements) so a matched probe is on the
/// scale of one sub-6 element.
///
/// Each row is normalized per sample. Both blocks are divided by the RMS
/// magnitude of the sub-6 block, which removes path loss but keeps the
/// mm-wave to sub-6 power ratio; that ratio carries the elevation mismatch
/// between the user and the probe row. Each block is then rotated by its own
/// common phase so its reference sum is real-positive (sub-6: element 0
/// summed over subcarriers; probes: magnitude-weighted sum of all pilots),
/// removing the random carrier phase.
pub fn assemble_features(h_sub6: &CMatrix, h_mm: &CMatrix, codebook: &Codebook) -> Vec<f64> {
    let e_sub = h_sub6.rows();
    let c_sub = h_sub6.cols();
    let mut sub6: Vec<C64> = (0..c_sub)
        .flat_map(|c| (0..e_sub).map(move |e| (c, e)))
        .map(|(c, e)| h_sub6.get(e, c))
        .collect();

    let first = CMatrix::from_fn(h_mm.rows(), PROBE_SUBCARRIERS, |e, c| h_mm.get(e, c));
    let probe_scale = 1.0 / (h_mm.rows() as f64).sqrt();
    let mut probes = alloc::vec![C64::new(0.0, 0.0); PROBE_BEAMS * PROBE_SUBCARRIERS];
    for (p, &b) in probe_beams(codebook).iter().enumerate() {
        let g = effective_channel(&first, &codebook.beam(b)).expect("probe dims follow the codebook");
        for (c, v) in g.iter().enumerate() {
            probes[c * PROBE_BEAMS + p] = *v * probe_scale;
        }
    }

    let scale = rms(&sub6);
    if scale > 0.0 {
        let reference = (0..c_sub).map(|c| h_sub6.get(0, c)).sum();
        normalize_block(&mut sub6, reference, scale);
        let reference = probes.iter().map(|z| z * z.norm()).sum();
        normalize_block(&mut probes, reference, scale);
    }

    let len = sub6.len() + probes.len();
    let mut out = alloc::vec![0.0; FEATURE_CHANNELS * len];
    for (i, z) in sub6.iter().chain(&probes).enumerate() {
        out[i] = z.re;
        out[len + i] = z.im;
    }
    out
}

/// Max-abs feature scaling and beam-index targets.
///
/// `raw` holds `n_rows` rows; `beams` the oracle index of each row.
pub fn normalize_dataset(raw: &[f64], beams: &[usize], n_beams: usize) -> Result<(Vec<f32>, Vec<f32>, NormMeta)> {
    if raw.is_empty() || beams.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !raw.len().is_multiple_of(beams.len()) || !(raw.len() / beams.len()).is_multiple_of(FEATURE_CHANNELS) {
        return Err(Error::LengthMismatch(raw.len(), beams.len()));
    }
    let scale = raw.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::DegenerateData(format!("feature max-abs is {scale}")));
    }
    let meta = NormMeta {
        feature_scale: scale,
        n_beams,
        feature_length: raw.len() / beams.len() / FEATURE_CHANNELS,
    };
    let features = raw.iter().map(|&x| (x / scale) as f32).collect();
    let targets = beams.iter().map(|&b| meta.target(b) as f32).collect();
    Ok((features, targets, meta))
}

/// One synthesized user with everything derived from it.
#[derive(Debug, Clone)]
pub struct GeneratedSample {
    pub geometry: Geometry,
    pub sample: ChannelSample,
    pub raw_features: Vec<f64>,
}

fn generate_one(
    config: &ScenarioConfig,
    codebook: &Codebook,
    budget: &LinkBudget,
    index: usize,
    forced: Kinematics,
) -> GeneratedSample {
    let geometry = sample_geometry_at(config, index, forced);
    let h_sub6 = synthesize_channel(&geometry, Band::Sub6, config).quantized_f32();
    let h_mm = synthesize_channel(&geometry, Band::MmWave, config).quantized_f32();
    let (oracle_beam, oracle_se) = exhaustive_search(&h_mm, codebook, budget).expect("dims follow the config");
    let raw_features = assemble_features(&h_sub6, &h_mm, codebook);
    let sample = ChannelSample {
        bs_index: geometry.bs_index,
        user_position: geometry.user_position,
        velocity_kmh: geometry.velocity_kmh,
        heading: geometry.heading,
        los: geometry.los,
        doppler_hz: geometry.doppler_hz(config.carrier_freq_mmwave),
        oracle_beam,
        oracle_se,
        seed: geometry.seed,
        h_sub6,
        h_mm,
    };
    GeneratedSample {
        geometry,
        sample,
        raw_features,
    }
}

pub(crate) fn codebook_for(config: &ScenarioConfig) -> Codebook {
    build_codebook(config.mmwave_antenna.y, config.mmwave_antenna.z, config.azimuth_oversampling())
}

/// Generates users `indices` of `config`, optionally at a forced kinematic point.
pub fn generate_samples<E: Executor>(
    config: &ScenarioConfig,
    indices: Range<usize>,
    forced: Kinematics,
    exec: &E,
) -> Result<Vec<GeneratedSample>> {
    config.validate()?;
    let codebook = codebook_for(config);
    let budget = LinkBudget::from_db(config.label_snr_db, config.mmwave_subcarriers);
    let start = indices.start;
    Ok(exec.map_indexed(indices.len(), |i| generate_one(config, &codebook, &budget, start + i, forced)))
}

/// Generates and normalizes the `n_users` dataset of `config`.
pub fn generate_dataset<E: Executor>(config: &ScenarioConfig, exec: &E) -> Result<Dataset> {
    let generated = generate_samples(config, 0..config.n_users, Kinematics::default(), exec)?;
    if generated.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut raw = Vec::with_capacity(generated.len() * generated[0].raw_features.len());
    let mut beams = Vec::with_capacity(generated.len());
    let mut samples = Vec::with_capacity(generated.len());
    for g in generated {
        raw.extend_from_slice(&g.raw_features);
        beams.push(g.sample.oracle_beam);
        samples.push(g.sample);
    }
    let (features, targets, norm_meta) = normalize_dataset(&raw, &beams, config.n_beams)?;
    Ok(Dataset {
        samples,
        features,
        targets,
        norm_meta,
        config: config.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chansim::Scenario;
    use crate::exec::Sequential;

    #[test]
    fn zero_features_are_degenerate() {
        assert!(matches!(
            normalize_dataset(&[0.0; 4], &[0], 512),
            Err(Error::DegenerateData(_))
        ));
    }

    #[test]
    fn max_abs_scaling_and_endpoint_target() {
        let (f, t, meta) = normalize_dataset(&[-2.0, 4.0], &[511], 512).unwrap();
        assert_eq!(f, [-0.5, 1.0]);
        assert_eq!(t, [1.0]);
        assert_eq!(meta.feature_scale, 4.0);
    }

    #[test]
    fn small_dataset_shape() {
        let mut c = ScenarioConfig::new(Scenario::Urban);
        c.n_users = 10;
        let d = generate_dataset(&c, &Sequential).unwrap();
        assert_eq!(d.len(), 10);
        assert_eq!(d.features.len(), 10 * 2 * 384);
        assert!(d.features.iter().all(|x| x.abs() <= 1.0));
        assert!(d.targets.iter().all(|t| (0.0..=1.0).contains(t)));
        for s in &d.samples {
            assert!(s.oracle_beam < 512 && s.h_mm.is_finite() && s.h_sub6.is_finite());
        }
    }

    #[test]
    fn probes_are_evenly_strided() {
        let cb = build_codebook(32, 8, 2);
        let p = probe_beams(&cb);
        assert_eq!(p.len(), 16);
        assert!(p.windows(2).all(|w| w[1] - w[0] == 4));
    }
}
