use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::Codebook;
use crate::linalg::{CMatrix, C64};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub snr_db: f64,
    pub snr_linear: f64,
    pub n_subcarriers: usize,
}

impl LinkBudget {
    pub fn from_db(snr_db: f64, n_subcarriers: usize) -> Self {
        LinkBudget {
            snr_db,
            snr_linear: 10f64.powf(snr_db / 10.0),
            n_subcarriers,
        }
    }

    pub fn with_snr_db(&self, snr_db: f64) -> Self {
        Self::from_db(snr_db, self.n_subcarriers)
    }

    fn check(&self, h: &CMatrix) -> Result<()> {
        if self.n_subcarriers != h.cols() || self.n_subcarriers == 0 {
            return Err(Error::dims("link budget subcarriers", &[self.n_subcarriers], &h.shape()));
        }
        if !(self.snr_linear > 0.0) {
            return Err(Error::Config(alloc::format!("snr must be positive, got {}", self.snr_linear)));
        }
        Ok(())
    }
}

/// g[c] = (column c of H)^H · f for every subcarrier.
pub fn effective_channel(h: &CMatrix, f: &[C64]) -> Result<Vec<C64>> {
    if h.rows() != f.len() {
        return Err(Error::dims("effective_channel", &h.shape(), &[f.len()]));
    }
    let mut g = vec![C64::new(0.0, 0.0); h.cols()];
    for (e, &fe) in f.iter().enumerate() {
        for (gc, &hv) in g.iter_mut().zip(h.row(e)) {
            *gc += hv.conj() * fe;
        }
    }
    Ok(g)
}

fn log_sum(gains: impl Iterator<Item = f64>, snr: f64) -> f64 {
    gains.map(|p| (1.0 + snr * p).log2()).sum()
}

/// Per-subcarrier mean SE = (1/C)·Σ_c log₂(1 + SNR·|g[c]|²), bits/s/Hz.
pub fn spectral_efficiency(h: &CMatrix, f: &[C64], budget: &LinkBudget) -> Result<f64> {
    Ok(spectral_efficiency_sum(h, f, budget)? / h.cols() as f64)
}

/// Unaveraged Σ_c log₂(1 + SNR·|g[c]|²).
pub fn spectral_efficiency_sum(h: &CMatrix, f: &[C64], budget: &LinkBudget) -> Result<f64> {
    budget.check(h)?;
    let g = effective_channel(h, f)?;
    Ok(log_sum(g.iter().map(|z| z.norm_sqr()), budget.snr_linear))
}

/// Mean SE of every beam in `codebook` on `h`, using the Kronecker factors.
pub fn beam_spectral_efficiencies(h: &CMatrix, codebook: &Codebook, budget: &LinkBudget) -> Result<Vec<f64>> {
    budget.check(h)?;
    if h.rows() != codebook.n_elements() {
        return Err(Error::dims("beam_spectral_efficiencies", &h.shape(), &[codebook.n_elements()]));
    }
    let (ny, nz) = codebook.elements();
    let (n_az, n_el) = (codebook.n_azimuth(), codebook.n_elevation());
    let az = codebook.az_factor();
    let el = codebook.el_factor();
    let mut se = vec![0.0; n_az * n_el];
    let mut partial = vec![C64::new(0.0, 0.0); nz * n_az];
    let mut x = vec![C64::new(0.0, 0.0); nz * ny];
    for c in 0..h.cols() {
        for e in 0..nz * ny {
            x[e] = h.get(e, c).conj();
        }
        // partial[z][k] = Σ_y conj(H[z,y]) · A[y][k]
        for z in 0..nz {
            let row = &mut partial[z * n_az..(z + 1) * n_az];
            row.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
            for y in 0..ny {
                let xv = x[z * ny + y];
                for (acc, &a) in row.iter_mut().zip(az.row(y)) {
                    *acc += xv * a;
                }
            }
        }
        for m in 0..n_el {
            for k in 0..n_az {
                let mut g = C64::new(0.0, 0.0);
                for z in 0..nz {
                    g += el.get(z, m) * partial[z * n_az + k];
                }
                se[m * n_az + k] += (1.0 + budget.snr_linear * g.norm_sqr()).log2();
            }
        }
    }
    let c = h.cols() as f64;
    se.iter_mut().for_each(|v| *v /= c);
    Ok(se)
}

/// Best beam by mean SE; ties go to the lowest index.
pub fn exhaustive_search(h: &CMatrix, codebook: &Codebook, budget: &LinkBudget) -> Result<(usize, f64)> {
    let se = beam_spectral_efficiencies(h, codebook, budget)?;
    Ok(argmax(&se))
}

pub(crate) fn argmax(values: &[f64]) -> (usize, f64) {
    let mut best = (0, values[0]);
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}
