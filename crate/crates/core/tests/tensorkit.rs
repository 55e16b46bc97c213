use beamnet_core::rng::stream;
use beamnet_core::tensorkit::{adam_step, early_stop, scheduler_step, Graph, OptimizerState, SchedulerState, Tensor};
use proptest::prelude::*;
use rand::Rng;

fn random(seed: u64, shape: &[usize]) -> Tensor {
    let mut rng = stream(seed, &[0]);
    Tensor::from_fn(shape, |_| rng.random_range(-1.0..1.0))
}

#[test]
fn matmul_matches_naive_loops() {
    let (a, b) = (random(1, &[2, 3, 5]), random(2, &[5, 4]));
    let mut g = Graph::new();
    let (va, vb) = (g.constant(a.clone()), g.constant(b.clone()));
    let y = g.matmul(va, vb).unwrap();
    let y = g.value(y);
    assert_eq!(y.shape(), &[2, 3, 4]);
    for r in 0..6 {
        for c in 0..4 {
            let want: f64 = (0..5).map(|k| a.data()[r * 5 + k] * b.data()[k * 4 + c]).sum();
            assert!((y.data()[r * 4 + c] - want).abs() < 1e-12);
        }
    }
}

#[test]
fn conv1d_matches_naive_loops() {
    let (x, w) = (random(3, &[2, 11, 3]), random(4, &[4, 3, 5]));
    for (stride, padding) in [(1, 0), (2, 1), (3, 2)] {
        let mut g = Graph::new();
        let (vx, vw) = (g.constant(x.clone()), g.constant(w.clone()));
        let y = g.conv1d(vx, vw, stride, padding).unwrap();
        let y = g.value(y);
        let lout = (11 + 2 * padding - 4) / stride + 1;
        assert_eq!(y.shape(), &[2, lout, 5]);
        for b in 0..2 {
            for o in 0..lout {
                for co in 0..5 {
                    let mut want = 0.0;
                    for t in 0..4 {
                        let pos = (o * stride + t) as isize - padding as isize;
                        if !(0..11).contains(&pos) {
                            continue;
                        }
                        for ci in 0..3 {
                            want += x.data()[(b * 11 + pos as usize) * 3 + ci] * w.data()[(t * 3 + ci) * 5 + co];
                        }
                    }
                    assert!((y.data()[(b * lout + o) * 5 + co] - want).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn dropout_is_unbiased_and_inert_at_inference() {
    let x = Tensor::from_fn(&[200_000], |_| 1.0);
    let mut g = Graph::new();
    let v = g.constant(x);
    let mut rng = stream(8, &[]);
    let y = g.dropout(v, 0.3, true, &mut rng).unwrap();
    let d = g.value(y).data();
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    assert!((mean - 1.0).abs() < 0.01, "{mean}");
    let zeros = d.iter().filter(|&&z| z == 0.0).count() as f64 / d.len() as f64;
    assert!((zeros - 0.3).abs() < 0.01);
    assert!(d.iter().all(|&z| z == 0.0 || (z - 1.0 / 0.7).abs() < 1e-12));

    let off = g.dropout(v, 0.3, false, &mut rng).unwrap();
    assert_eq!(off, v);
    assert!(g.dropout(v, 1.0, true, &mut rng).is_err());
}

#[test]
fn zero_query_attention_averages_values() {
    // Zero scores give uniform weights, so every position outputs mean(V).
    let (heads, len, dim) = (2, 6, 3);
    let v = random(5, &[heads, len, dim]);
    let mut g = Graph::new();
    let q = g.constant(Tensor::zeros(&[heads, len, dim]));
    let k = g.constant(random(6, &[heads, len, dim]));
    let val = g.constant(v.clone());
    let s = g.batch_matmul(q, k, true).unwrap();
    let a = g.softmax(s);
    let z = g.batch_matmul(a, val, false).unwrap();
    let z = g.value(z);
    for h in 0..heads {
        for d in 0..dim {
            let mean = (0..len).map(|t| v.data()[(h * len + t) * dim + d]).sum::<f64>() / len as f64;
            for t in 0..len {
                assert!((z.data()[(h * len + t) * dim + d] - mean).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn softmax_rows_sum_to_one_for_large_inputs() {
    let mut g = Graph::new();
    let x = g.constant(Tensor::new(&[2, 3], vec![1000.0, 1001.0, 999.0, -800.0, -800.0, -800.0]).unwrap());
    let y = g.softmax(x);
    let d = g.value(y).data();
    for row in d.chunks(3) {
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(row.iter().all(|p| p.is_finite()));
    }
    assert!((d[3] - 1.0 / 3.0).abs() < 1e-12);
}

/// Adam with L2 written out for one scalar parameter.
fn adam_oracle(w0: f64, grads: &[f64], lr: f64, lambda: f64) -> f64 {
    let (mut w, mut m, mut v) = (w0, 0.0, 0.0);
    for (i, g) in grads.iter().enumerate() {
        let t = (i + 1) as i32;
        let g = g + lambda * w;
        m = 0.9 * m + 0.1 * g;
        v = 0.999 * v + 0.001 * g * g;
        let mh = m / (1.0 - 0.9f64.powi(t));
        let vh = v / (1.0 - 0.999f64.powi(t));
        w -= lr * mh / (vh.sqrt() + 1e-8);
    }
    w
}

#[test]
fn adam_tracks_oracle_with_selective_decay() {
    let grads = [0.3, -1.2, 0.05, 2.0, -0.4, 0.0, 0.7];
    let mut params = vec![Tensor::scalar(0.8), Tensor::scalar(0.8)];
    let mut s = OptimizerState::new(&params, 0.01);
    s.l2_lambda = 0.05;
    for g in grads {
        adam_step(&mut params, &[vec![g], vec![g]], &[true, false], &mut s).unwrap();
    }
    assert!((params[0].data()[0] - adam_oracle(0.8, &grads, 0.01, 0.05)).abs() < 1e-12);
    assert!((params[1].data()[0] - adam_oracle(0.8, &grads, 0.01, 0.0)).abs() < 1e-12);
    assert_eq!(s.step, grads.len() as u64);
}

#[test]
fn adam_minimizes_a_quadratic() {
    let mut p = vec![Tensor::from_fn(&[3], |i| i as f64 - 5.0)];
    let mut s = OptimizerState::new(&p, 0.05);
    s.l2_lambda = 0.0;
    for _ in 0..2000 {
        let g: Vec<f64> = p[0].data().iter().map(|w| 2.0 * (w - 1.5)).collect();
        adam_step(&mut p, &[g], &[true], &mut s).unwrap();
    }
    assert!(p[0].data().iter().all(|w| (w - 1.5).abs() < 1e-3));
}

#[test]
fn scheduler_halves_on_plateau_and_resets_on_improvement() {
    let mut s = SchedulerState::new(1e-3);
    let mut lrs = Vec::new();
    let metrics: Vec<f64> = [1.0, 0.9].into_iter().chain(std::iter::repeat_n(0.95, 25)).collect();
    for m in &metrics {
        lrs.push(scheduler_step(&mut s, *m));
    }
    // Ten epochs without beating 0.9 trigger each halving.
    assert_eq!(lrs[10], 1e-3);
    assert_eq!(lrs[11], 5e-4);
    assert_eq!(lrs[20], 5e-4);
    assert_eq!(lrs[21], 2.5e-4);
    assert_eq!(scheduler_step(&mut s, 0.1), 2.5e-4);
    assert_eq!(s.epochs_since_improvement, 0);
    for _ in 0..40 {
        scheduler_step(&mut s, 0.2);
    }
    assert_eq!(s.learning_rate, 1e-4);
}

#[test]
fn early_stop_waits_a_full_patience_window() {
    let mut h = vec![1.0, 0.5];
    h.extend(std::iter::repeat_n(0.6, 34));
    assert!(!early_stop(&h, 35));
    h.push(0.6);
    assert!(early_stop(&h, 35));
    h.push(0.4);
    assert!(!early_stop(&h, 35));
}

proptest! {
    #[test]
    fn softmax_is_shift_invariant(row in prop::collection::vec(-20.0f64..20.0, 1..16), shift in -50.0f64..50.0) {
        let n = row.len();
        let mut g = Graph::new();
        let a = g.constant(Tensor::new(&[1, n], row.clone()).unwrap());
        let b = g.constant(Tensor::new(&[1, n], row.iter().map(|x| x + shift).collect()).unwrap());
        let (sa, sb) = (g.softmax(a), g.softmax(b));
        for (x, y) in g.value(sa).data().iter().zip(g.value(sb).data()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn adam_moments_never_go_subnormal() {
    let mut p = vec![Tensor::scalar(0.5)];
    let mut s = OptimizerState::new(&p, 1e-3);
    s.l2_lambda = 0.0;
    adam_step(&mut p, &[vec![1.0]], &[false], &mut s).unwrap();
    for _ in 0..8000 {
        adam_step(&mut p, &[vec![0.0]], &[false], &mut s).unwrap();
    }
    assert!(s.m[0][0] == 0.0 || s.m[0][0].abs() >= f64::MIN_POSITIVE);
    assert!(s.v[0][0].is_normal());
}
