//! Training loop, held-out evaluation and the SNR / velocity / distance /
//! Doppler sweeps, plus the cross-loss comparison table.

mod eval;
mod losses;
mod stats;
mod sweep;
mod train;

pub use eval::{evaluate, top_k_hit, EvalReport};
pub use losses::{compare_losses, LossCell, LossDensity};
pub use stats::{bootstrap_ci, moving_min, spearman};
pub use sweep::{
    default_distance_grid, default_snr_grid, default_velocity_grid, sweep_doppler, sweep_snr, sweep_velocity_distance,
    SweepRecord, SweepResult, SweepSettings,
};
pub use train::{train, Clock, EpochRecord, NoClock, TrainHyper, TrainReport};
