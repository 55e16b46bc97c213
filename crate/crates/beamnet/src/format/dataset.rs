use std::path::Path;

use beamnet_core::chansim::{ChannelSample, Dataset, NormMeta, ScenarioConfig, FEATURE_CHANNELS};
use beamnet_core::linalg::{CMatrix, C64};
use serde::{Deserialize, Serialize};

use super::{read_file, Reader, Writer};
use crate::Result;

const MAGIC: &[u8; 4] = b"CBRN";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct SampleMeta {
    bs_index: usize,
    user_position: [f64; 2],
    velocity_kmh: f64,
    heading: f64,
    los: bool,
    doppler_hz: Vec<f64>,
    oracle_beam: usize,
    oracle_se: f64,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
struct Metadata {
    config: ScenarioConfig,
    norm_meta: NormMeta,
    samples: Vec<SampleMeta>,
}

fn write_matrix(w: &mut Writer, h: &CMatrix) {
    w.f32s(h.as_slice().iter().flat_map(|z| [z.re as f32, z.im as f32]));
}

/// Header, f32 features, f32 targets, interleaved f32 channels, JSON metadata.
pub fn save_dataset(dataset: &Dataset, path: &Path) -> Result<()> {
    let first = dataset.samples.first();
    let dims = |f: fn(&ChannelSample) -> [usize; 2], fallback: [usize; 2]| first.map_or(fallback, f);
    let c = &dataset.config;
    let sub6 = dims(|s| s.h_sub6.shape(), [c.sub6_antenna.elements(), c.sub6_subcarriers]);
    let mm = dims(|s| s.h_mm.shape(), [c.mmwave_antenna.elements(), c.mmwave_subcarriers]);
    let mut w = Writer::new(MAGIC, VERSION);
    w.u64(dataset.len() as u64);
    w.u32(FEATURE_CHANNELS as u32);
    w.u32(dataset.norm_meta.feature_length as u32);
    w.u32(dataset.norm_meta.n_beams as u32);
    for d in [sub6[0], sub6[1], mm[0], mm[1]] {
        w.u32(d as u32);
    }
    w.f32s(dataset.features.iter().copied());
    w.f32s(dataset.targets.iter().copied());
    for s in &dataset.samples {
        write_matrix(&mut w, &s.h_sub6);
        write_matrix(&mut w, &s.h_mm);
    }
    let meta = Metadata {
        config: dataset.config.clone(),
        norm_meta: dataset.norm_meta,
        samples: dataset
            .samples
            .iter()
            .map(|s| SampleMeta {
                bs_index: s.bs_index,
                user_position: s.user_position,
                velocity_kmh: s.velocity_kmh,
                heading: s.heading,
                los: s.los,
                doppler_hz: s.doppler_hz.clone(),
                oracle_beam: s.oracle_beam,
                oracle_se: s.oracle_se,
                seed: s.seed,
            })
            .collect(),
    };
    w.blob(&serde_json::to_vec(&meta).expect("metadata serializes"));
    w.finish(path)
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let buf = read_file(path)?;
    let mut r = Reader::open(&buf, path, MAGIC, VERSION)?;
    let n = r.count()?;
    let channels = r.u32()? as usize;
    let length = r.u32()? as usize;
    let n_beams = r.u32()? as usize;
    let (se, sc, me, mc) = (r.u32()? as usize, r.u32()? as usize, r.u32()? as usize, r.u32()? as usize);
    if channels != FEATURE_CHANNELS {
        return Err(r.error(format!("expected {FEATURE_CHANNELS} feature channels, found {channels}")));
    }
    let features = r.f32s(n * channels * length)?;
    let targets = r.f32s(n)?;
    let mut mats = Vec::with_capacity(n);
    let read_matrix = |r: &mut Reader, rows: usize, cols: usize| -> Result<CMatrix> {
        let v = r.f32s(2 * rows * cols)?;
        let data = v.chunks_exact(2).map(|p| C64::new(p[0] as f64, p[1] as f64)).collect();
        Ok(CMatrix::from_vec(rows, cols, data))
    };
    for _ in 0..n {
        let a = read_matrix(&mut r, se, sc)?;
        let b = read_matrix(&mut r, me, mc)?;
        mats.push((a, b));
    }
    let meta: Metadata =
        serde_json::from_slice(r.blob()?).map_err(|e| r.error(format!("metadata JSON: {e}")))?;
    r.finish()?;
    if meta.samples.len() != n || meta.norm_meta.n_beams != n_beams || meta.norm_meta.feature_length != length {
        return Err(r.error("metadata disagrees with header dimensions"));
    }
    let samples = mats
        .into_iter()
        .zip(meta.samples)
        .map(|((h_sub6, h_mm), m)| ChannelSample {
            h_sub6,
            h_mm,
            bs_index: m.bs_index,
            user_position: m.user_position,
            velocity_kmh: m.velocity_kmh,
            heading: m.heading,
            los: m.los,
            doppler_hz: m.doppler_hz,
            oracle_beam: m.oracle_beam,
            oracle_se: m.oracle_se,
            seed: m.seed,
        })
        .collect();
    Ok(Dataset {
        samples,
        features,
        targets,
        norm_meta: meta.norm_meta,
        config: meta.config,
    })
}
