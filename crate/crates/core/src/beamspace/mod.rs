//! Codebook beamforming: UPA DFT codebook, spectral efficiency, the
//! exhaustive-search oracle and beam-training overhead accounting.

mod codebook;
mod overhead;
mod se;

pub use codebook::{build_codebook, Codebook};
pub use overhead::{beam_training_gain, overhead_adjusted_se, overhead_factor, TrainingGain};
pub(crate) use se::argmax;
pub use se::{
    beam_spectral_efficiencies, effective_channel, exhaustive_search, spectral_efficiency,
    spectral_efficiency_sum, LinkBudget,
};

/// Probe beams charged to the predictor per beam decision.
pub const PREDICTOR_PROBES: usize = crate::chansim::PROBE_BEAMS;
