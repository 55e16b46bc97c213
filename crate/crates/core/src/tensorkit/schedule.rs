use serde::{Deserialize, Serialize};

/// Reduce-on-plateau learning-rate state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedulerState {
    pub learning_rate: f64,
    pub patience: usize,
    pub factor: f64,
    pub min_lr: f64,
    pub best_metric: f64,
    pub epochs_since_improvement: usize,
}

impl SchedulerState {
    pub fn new(learning_rate: f64) -> Self {
        SchedulerState {
            learning_rate,
            patience: 10,
            factor: 0.5,
            min_lr: 1e-4,
            best_metric: f64::INFINITY,
            epochs_since_improvement: 0,
        }
    }
}

/// Records `metric` and returns the learning rate for the next epoch.
///
/// After `patience` consecutive epochs without a strict improvement the rate
/// is multiplied by `factor`, floored at `min_lr`, and the counter restarts.
pub fn scheduler_step(state: &mut SchedulerState, metric: f64) -> f64 {
    if metric < state.best_metric {
        state.best_metric = metric;
        state.epochs_since_improvement = 0;
    } else {
        state.epochs_since_improvement += 1;
        if state.epochs_since_improvement >= state.patience {
            let next = (state.learning_rate * state.factor).max(state.min_lr);
            state.learning_rate = next.min(state.learning_rate);
            state.epochs_since_improvement = 0;
        }
    }
    state.learning_rate
}

/// True when none of the last `patience` entries of `history` improved on
/// the best value seen before them.
pub fn early_stop(history: &[f64], patience: usize) -> bool {
    if history.len() <= patience {
        return false;
    }
    let split = history.len() - patience;
    let best_before = history[..split].iter().cloned().fold(f64::INFINITY, f64::min);
    history[split..].iter().all(|&x| !(x < best_before))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halves_after_ten_flat_epochs() {
        let mut s = SchedulerState::new(0.01);
        scheduler_step(&mut s, 1.0);
        for _ in 0..9 {
            assert_eq!(scheduler_step(&mut s, 1.0), 0.01);
        }
        assert_eq!(scheduler_step(&mut s, 1.0), 0.005);
    }

    #[test]
    fn floor_holds() {
        let mut s = SchedulerState::new(1e-4);
        for _ in 0..50 {
            assert_eq!(scheduler_step(&mut s, 1.0), 1e-4);
        }
    }

    #[test]
    fn decreasing_history_never_stops() {
        let h: alloc::vec::Vec<f64> = (0..40).map(|i| 1.0 / (1.0 + i as f64)).collect();
        for n in 1..=h.len() {
            assert!(!early_stop(&h[..n], 35));
        }
        let mut flat = h.clone();
        flat.extend(core::iter::repeat_n(1.0, 35));
        assert!(early_stop(&flat, 35));
    }
}
