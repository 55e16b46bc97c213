//! Dense f64 tensors with tape-based reverse-mode differentiation, the three
//! regression losses, Adam, plateau scheduling and early stopping.
//!
//! RMSE is the root of the mean squared difference, `sqrt(mean((ŷ − y)²))`.
//! The printed form `sqrt(mean(ŷ² − y²))` can go negative under the radical
//! and is treated as a typo.

mod adam;
mod gemm;
mod graph;
mod loss;
mod schedule;
mod tensor;

pub use adam::{adam_step, OptimizerState};
pub use graph::{Gradients, Graph, Var};
pub use loss::{huber_loss, mae, rmse, LossKind, HUBER_DELTA};
pub use schedule::{early_stop, scheduler_step, SchedulerState};
pub use tensor::Tensor;

/// Zeroes subnormals, which are orders of magnitude slower to compute with.
pub(crate) fn flush(x: f64) -> f64 {
    if x.abs() < f64::MIN_POSITIVE {
        0.0
    } else {
        x
    }
}
