//! Path-sum channel synthesis and Doppler aging.

use alloc::vec::Vec;
use core::f64::consts::TAU;
#[allow(unused_imports)]
use num_traits::Float;

use super::config::{AntennaDims, ScenarioConfig};
use super::geometry::{Band, Geometry};
use crate::linalg::{CMatrix, C64};
use crate::{Error, Result};

/// Uniform-planar-array response toward (`az`, `el`). Element `z * y_count + y`
/// carries phase 2π·spacing·(y·cos(el)·sin(az) + z·sin(el)).
pub fn steering_vector(dims: AntennaDims, spacing: f64, az: f64, el: f64) -> Vec<C64> {
    let u = spacing * el.cos() * az.sin();
    let v = spacing * el.sin();
    let mut out = Vec::with_capacity(dims.y * dims.z);
    for z in 0..dims.z {
        for y in 0..dims.y {
            out.push(C64::from_polar(1.0, TAU * (y as f64 * u + z as f64 * v)));
        }
    }
    out
}

struct BandSpec {
    dims: AntennaDims,
    subcarriers: usize,
    spacing_hz: f64,
}

fn band_spec(band: Band, config: &ScenarioConfig) -> BandSpec {
    match band {
        Band::Sub6 => BandSpec {
            dims: config.sub6_antenna,
            subcarriers: config.sub6_subcarriers,
            spacing_hz: config.bandwidth_sub6 / config.sub6_subcarriers as f64,
        },
        Band::MmWave => BandSpec {
            dims: config.mmwave_antenna,
            subcarriers: config.mmwave_subcarriers,
            spacing_hz: config.bandwidth_mmwave / config.mmwave_subcarriers as f64,
        },
    }
}

/// Contribution of every path to the `[elements × subcarriers]` channel:
/// C_p[e][c] = g_p · a_e(az_p, el_p) · exp(−j2π·c·Δf·τ_p).
pub fn path_components(geometry: &Geometry, band: Band, config: &ScenarioConfig) -> Vec<CMatrix> {
    let spec = band_spec(band, config);
    geometry
        .paths
        .iter()
        .map(|p| {
            let gain = match band {
                Band::Sub6 => p.gain_sub6,
                Band::MmWave => p.gain_mm,
            };
            let a = steering_vector(spec.dims, config.antenna_spacing, p.aod_az, p.aod_el);
            let delay: Vec<C64> = (0..spec.subcarriers)
                .map(|c| C64::from_polar(1.0, -TAU * c as f64 * spec.spacing_hz * p.delay_s))
                .collect();
            CMatrix::from_fn(a.len(), spec.subcarriers, |e, c| gain * a[e] * delay[c])
        })
        .collect()
}

fn sum_components(components: &[CMatrix], rows: usize, cols: usize) -> CMatrix {
    let mut h = CMatrix::zeros(rows, cols);
    for comp in components {
        for (acc, v) in h.as_mut_slice().iter_mut().zip(comp.as_slice()) {
            *acc += v;
        }
    }
    h
}

/// Channel matrix `[elements × subcarriers]` of `band` for `geometry`.
pub fn synthesize_channel(geometry: &Geometry, band: Band, config: &ScenarioConfig) -> CMatrix {
    let spec = band_spec(band, config);
    let comps = path_components(geometry, band, config);
    sum_components(&comps, spec.dims.elements(), spec.subcarriers)
}

/// Ages `h` by rotating each path contribution by exp(j2π·f_d,p·Δt):
/// H' = H + Σ_p C_p·(exp(j2π·f_d,p·Δt) − 1).
///
/// Zero Doppler or zero `delta_t` returns `h` bit-for-bit.
pub fn apply_doppler(h: &CMatrix, doppler_hz: &[f64], components: &[CMatrix], delta_t: f64) -> Result<CMatrix> {
    if doppler_hz.len() != components.len() {
        return Err(Error::LengthMismatch(doppler_hz.len(), components.len()));
    }
    if !(delta_t >= 0.0) {
        return Err(Error::Config(alloc::format!("delta_t must be ≥ 0, got {delta_t}")));
    }
    let mut out = h.clone();
    for (comp, &f) in components.iter().zip(doppler_hz) {
        if comp.shape() != h.shape() {
            return Err(Error::dims("apply_doppler", &comp.shape(), &h.shape()));
        }
        let theta = TAU * f * delta_t;
        if theta == 0.0 {
            continue;
        }
        let delta = C64::new(theta.cos() - 1.0, theta.sin());
        for (acc, v) in out.as_mut_slice().iter_mut().zip(comp.as_slice()) {
            *acc += v * delta;
        }
    }
    Ok(out)
}

/// Rotates the path gains of `geometry` in both bands, the geometric view of
/// [`apply_doppler`]. Magnitudes are unchanged.
pub fn rotate_paths(geometry: &Geometry, doppler_mm: &[f64], doppler_sub6: &[f64], delta_t: f64) -> Geometry {
    let mut g = geometry.clone();
    for ((p, &fm), &fs) in g.paths.iter_mut().zip(doppler_mm).zip(doppler_sub6) {
        p.gain_mm *= C64::from_polar(1.0, TAU * fm * delta_t);
        p.gain_sub6 *= C64::from_polar(1.0, TAU * fs * delta_t);
    }
    g
}

/// Channel seen `delta_t` after capture: the user moves along its heading and
/// each path picks up its Doppler phase. Scatterers stay fixed.
pub fn aged_channel(geometry: &Geometry, band: Band, config: &ScenarioConfig, delta_t: f64) -> Result<CMatrix> {
    let moved = geometry.advanced(delta_t, config);
    let spec = band_spec(band, config);
    let carrier = match band {
        Band::Sub6 => config.carrier_freq_sub6,
        Band::MmWave => config.carrier_freq_mmwave,
    };
    let comps = path_components(&moved, band, config);
    let h = sum_components(&comps, spec.dims.elements(), spec.subcarriers);
    apply_doppler(&h, &geometry.doppler_hz(carrier), &comps, delta_t)
}
