use alloc::vec::Vec;
use core::f64::consts::TAU;
#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::{CMatrix, C64};

/// Kronecker UPA DFT codebook.
///
/// Beam `m * n_az + k` steers azimuth spatial frequency `(k − n_az/2)/n_az` and
/// elevation spatial frequency `(m − n_el/2)/n_el`, so indices increase with
/// angle inside each elevation row and the broadside beam sits at the centre.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    vectors: CMatrix,
    az_factor: CMatrix,
    el_factor: CMatrix,
    elements_y: usize,
    elements_z: usize,
    /// Steering azimuth of each azimuth beam for half-wavelength spacing, rad.
    pub azimuth_grid: Vec<f64>,
    /// Steering elevation of each elevation beam for half-wavelength spacing, rad.
    pub elevation_grid: Vec<f64>,
    /// (azimuth, elevation)
    pub oversampling: (usize, usize),
}

fn dft_factor(elements: usize, beams: usize) -> (CMatrix, Vec<f64>) {
    let norm = 1.0 / (elements as f64).sqrt();
    let freq = |b: usize| (b as f64 - (beams / 2) as f64) / beams as f64;
    let m = CMatrix::from_fn(elements, beams, |n, b| C64::from_polar(norm, TAU * n as f64 * freq(b)));
    let grid = (0..beams).map(|b| (2.0 * freq(b)).clamp(-1.0, 1.0).asin()).collect();
    (m, grid)
}

/// Builds the `(elements_y·elements_z) × (oversampling_az·elements_y·elements_z)`
/// codebook: an oversampled azimuth DFT basis Kronecker a critically sampled
/// elevation basis, columns unit-norm.
///
/// Panics if any count is zero.
pub fn build_codebook(elements_y: usize, elements_z: usize, oversampling_az: usize) -> Codebook {
    assert!(elements_y > 0 && elements_z > 0 && oversampling_az > 0, "codebook counts must be ≥ 1");
    let n_az = elements_y * oversampling_az;
    let (az_factor, azimuth_grid) = dft_factor(elements_y, n_az);
    let (el_factor, elevation_grid) = dft_factor(elements_z, elements_z);
    let n_el = elements_y * elements_z;
    let vectors = CMatrix::from_fn(n_el, n_az * elements_z, |e, b| {
        let (z, y) = (e / elements_y, e % elements_y);
        let (m, k) = (b / n_az, b % n_az);
        el_factor.get(z, m) * az_factor.get(y, k)
    });
    Codebook {
        vectors,
        az_factor,
        el_factor,
        elements_y,
        elements_z,
        azimuth_grid,
        elevation_grid,
        oversampling: (oversampling_az, 1),
    }
}

impl Codebook {
    pub fn n_beams(&self) -> usize {
        self.vectors.cols()
    }

    pub fn n_elements(&self) -> usize {
        self.vectors.rows()
    }

    pub fn n_azimuth(&self) -> usize {
        self.az_factor.cols()
    }

    pub fn n_elevation(&self) -> usize {
        self.el_factor.cols()
    }

    pub fn elements(&self) -> (usize, usize) {
        (self.elements_y, self.elements_z)
    }

    /// Beam index of (elevation row, azimuth column).
    pub fn index(&self, el: usize, az: usize) -> usize {
        el * self.n_azimuth() + az
    }

    /// (elevation row, azimuth column) of beam `b`.
    pub fn coordinates(&self, b: usize) -> (usize, usize) {
        (b / self.n_azimuth(), b % self.n_azimuth())
    }

    /// `[n_elements × n_beams]` matrix whose columns are the beams.
    pub fn vectors(&self) -> &CMatrix {
        &self.vectors
    }

    pub fn beam(&self, b: usize) -> Vec<C64> {
        self.vectors.column(b)
    }

    pub(crate) fn az_factor(&self) -> &CMatrix {
        &self.az_factor
    }

    pub(crate) fn el_factor(&self) -> &CMatrix {
        &self.el_factor
    }
}
