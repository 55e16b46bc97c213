use beamnet_core::rng::stream;
use beamnet_core::tensorkit::{huber_loss, mae, rmse, LossKind, HUBER_DELTA};
use proptest::prelude::*;
use rand::Rng;

// Scratch oracles, written from the textbook definitions with plain loops.

fn huber_oracle(p: &[f64], t: &[f64], delta: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..p.len() {
        let r = p[i] - t[i];
        let a = if r < 0.0 { -r } else { r };
        acc += if a <= delta { r * r / 2.0 } else { delta * a - delta * delta / 2.0 };
    }
    acc / p.len() as f64
}

fn mae_oracle(p: &[f64], t: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..p.len() {
        let r = p[i] - t[i];
        acc += if r < 0.0 { -r } else { r };
    }
    acc / p.len() as f64
}

fn rmse_oracle(p: &[f64], t: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..p.len() {
        acc += (p[i] - t[i]) * (p[i] - t[i]);
    }
    (acc / p.len() as f64).sqrt()
}

#[test]
fn random_vectors_match_oracles() {
    for case in 0..200u64 {
        let mut rng = stream(11, &[case]);
        let n = rng.random_range(1..300);
        let spread = [0.01, 0.1, 1.0, 10.0][case as usize % 4];
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(-spread..spread)).collect();
        let t: Vec<f64> = (0..n).map(|_| rng.random_range(-spread..spread)).collect();
        assert!((huber_loss(&p, &t, HUBER_DELTA).unwrap() - huber_oracle(&p, &t, HUBER_DELTA)).abs() < 1e-12);
        assert!((mae(&p, &t).unwrap() - mae_oracle(&p, &t)).abs() < 1e-12);
        assert!((rmse(&p, &t).unwrap() - rmse_oracle(&p, &t)).abs() < 1e-12);
        for kind in [LossKind::huber(), LossKind::Mae, LossKind::Rmse] {
            let direct = match kind {
                LossKind::Huber { delta } => huber_oracle(&p, &t, delta),
                LossKind::Mae => mae_oracle(&p, &t),
                LossKind::Rmse => rmse_oracle(&p, &t),
            };
            assert!((kind.eval(&p, &t).unwrap() - direct).abs() < 1e-12);
        }
    }
}

#[test]
fn huber_knee_is_continuous() {
    let d = HUBER_DELTA;
    let at = |r: f64| huber_loss(&[r], &[0.0], d).unwrap();
    for sign in [1.0, -1.0] {
        let below = at(sign * (d - 1e-9));
        let above = at(sign * (d + 1e-9));
        let knee = d * d / 2.0;
        assert!((below - knee).abs() < 1e-9 * d * 1.01);
        assert!((above - knee).abs() < 1e-9 * d * 1.01);
        assert!((above - below).abs() < 2.1e-9 * d);
        // Slope matches on both sides: δ·1e-9 per 1e-9 step.
        assert!(((above - knee) / 1e-9 - d).abs() < 1e-6);
        assert!(((knee - below) / 1e-9 - d).abs() < 1e-6);
    }
}

#[test]
fn huber_quadratic_and_linear_regimes() {
    assert!((huber_loss(&[0.05], &[0.0], 0.1).unwrap() - 0.00125).abs() < 1e-15);
    assert!((huber_loss(&[0.0], &[0.5], 0.1).unwrap() - 0.045).abs() < 1e-15);
}

#[test]
fn rmse_is_root_of_mean_square() {
    // √((1 + 9)/2), not √(Σ)/n.
    assert!((rmse(&[1.0, 3.0], &[0.0, 0.0]).unwrap() - 5f64.sqrt()).abs() < 1e-15);
}

proptest! {
    #[test]
    fn losses_are_nonnegative_and_zero_on_identity(v in prop::collection::vec(-5.0f64..5.0, 1..64)) {
        prop_assert_eq!(huber_loss(&v, &v, HUBER_DELTA).unwrap(), 0.0);
        prop_assert_eq!(mae(&v, &v).unwrap(), 0.0);
        prop_assert_eq!(rmse(&v, &v).unwrap(), 0.0);
        let shifted: Vec<f64> = v.iter().map(|x| x + 0.3).collect();
        prop_assert!(huber_loss(&v, &shifted, HUBER_DELTA).unwrap() > 0.0);
    }

    #[test]
    fn huber_is_bracketed(p in prop::collection::vec(-3.0f64..3.0, 1..64), t in prop::collection::vec(-3.0f64..3.0, 64)) {
        let t = &t[..p.len()];
        let h = huber_loss(&p, t, HUBER_DELTA).unwrap();
        // δ·MAE − δ²/2 ≤ Huber ≤ min(½MSE, δ·MAE).
        let m = mae(&p, t).unwrap();
        let ms = rmse(&p, t).unwrap().powi(2);
        prop_assert!(h <= 0.5 * ms + 1e-12);
        prop_assert!(h <= HUBER_DELTA * m + 1e-12);
        prop_assert!(h >= HUBER_DELTA * m - HUBER_DELTA * HUBER_DELTA / 2.0 - 1e-12);
    }

    #[test]
    fn symmetric_in_arguments(p in prop::collection::vec(-3.0f64..3.0, 1..32)) {
        let t: Vec<f64> = p.iter().map(|x| x * 0.5 - 0.2).collect();
        prop_assert!((huber_loss(&p, &t, 0.1).unwrap() - huber_loss(&t, &p, 0.1).unwrap()).abs() < 1e-15);
        prop_assert!((rmse(&p, &t).unwrap() - rmse(&t, &p).unwrap()).abs() < 1e-15);
    }
}
