use serde::{Deserialize, Serialize};

use super::se::{argmax, beam_spectral_efficiencies};
use super::{Codebook, LinkBudget};
use crate::chansim::MacProfile;
use crate::linalg::CMatrix;
use crate::{Error, Result};

/// Fraction of frame airtime left after measuring `n_trained_beams` beams.
pub fn overhead_factor(n_trained_beams: usize, mac: &MacProfile) -> f64 {
    (1.0 - n_trained_beams as f64 * mac.symbol_duration / mac.frame_duration).max(0.0)
}

/// se × max(0, 1 − n·T_symbol/T_frame).
pub fn overhead_adjusted_se(se: f64, n_trained_beams: usize, mac: &MacProfile) -> f64 {
    se * overhead_factor(n_trained_beams, mac)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TrainingGain {
    Defined(f64),
    /// The exhaustive baseline delivers zero effective SE.
    Undefined,
}

impl TrainingGain {
    pub fn value(self) -> Option<f64> {
        match self {
            TrainingGain::Defined(v) => Some(v),
            TrainingGain::Undefined => None,
        }
    }
}

/// Effective SE of `predicted_idx` (charged `n_probe_beams` probes) over the
/// effective SE of exhaustive search on the same channel (charged every beam).
pub fn beam_training_gain(
    predicted_idx: usize,
    h_aged: &CMatrix,
    codebook: &Codebook,
    budget: &LinkBudget,
    mac: &MacProfile,
    n_probe_beams: usize,
) -> Result<TrainingGain> {
    if predicted_idx >= codebook.n_beams() {
        return Err(Error::Config(alloc::format!(
            "beam {predicted_idx} outside codebook of {}",
            codebook.n_beams()
        )));
    }
    let se = beam_spectral_efficiencies(h_aged, codebook, budget)?;
    let (_, best) = argmax(&se);
    let den = overhead_adjusted_se(best, codebook.n_beams(), mac);
    if den == 0.0 {
        return Ok(TrainingGain::Undefined);
    }
    Ok(TrainingGain::Defined(overhead_adjusted_se(se[predicted_idx], n_probe_beams, mac) / den))
}
