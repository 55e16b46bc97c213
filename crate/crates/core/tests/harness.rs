use beamnet_core::brainet::{build_model, ConvSpec, ModelConfig};
use beamnet_core::chansim::{generate_dataset, Scenario, ScenarioConfig};
use beamnet_core::exec::{Executor, Sequential};
use beamnet_core::beamspace::{build_codebook, LinkBudget};
use beamnet_core::harness::{bootstrap_ci, evaluate, moving_min, spearman, top_k_hit, train, NoClock, TrainHyper};
use beamnet_core::rng::stream;
use proptest::prelude::*;
use rand::Rng;

/// Evaluates indices back to front, as an out-of-order pool might.
struct Reversed;

impl Executor for Reversed {
    fn map_indexed<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        let mut out: Vec<(usize, T)> = (0..n).rev().map(|i| (i, f(i))).collect();
        out.reverse();
        out.into_iter().map(|(_, t)| t).collect()
    }
}

fn tiny_config() -> ModelConfig {
    ModelConfig {
        conv_layers: vec![ConvSpec {
            in_ch: 2,
            out_ch: 4,
            kernel: 5,
            stride: 8,
        }],
        d_model: 8,
        n_heads: 2,
        dense_units: 6,
        dropout: 0.2,
        input_length: 384,
    }
}

fn tiny_hyper(epochs: usize) -> TrainHyper {
    TrainHyper {
        epochs,
        batch_size: 10,
        ..TrainHyper::default()
    }
}

fn tiny_dataset(n: usize) -> beamnet_core::chansim::Dataset {
    let mut cfg = ScenarioConfig::new(Scenario::Urban);
    cfg.n_users = n;
    generate_dataset(&cfg, &Sequential).unwrap()
}

#[test]
fn training_is_independent_of_executor_order() {
    let data = tiny_dataset(60);
    let mut a = build_model(tiny_config(), 4).unwrap();
    let mut b = a.clone();
    let ra = train(&mut a, &data, &tiny_hyper(3), &Sequential, &NoClock, |_| {}).unwrap();
    let rb = train(&mut b, &data, &tiny_hyper(3), &Reversed, &NoClock, |_| {}).unwrap();
    assert_eq!(ra, rb);
    assert_eq!(a.params, b.params);
}

#[test]
fn training_reduces_loss_and_restores_best() {
    let data = tiny_dataset(80);
    let mut m = build_model(tiny_config(), 1).unwrap();
    let mut seen = Vec::new();
    let r = train(&mut m, &data, &tiny_hyper(12), &Sequential, &NoClock, |e| seen.push(e.epoch)).unwrap();
    assert_eq!(seen, (1..=r.stopped_epoch).collect::<Vec<_>>());
    assert!(r.train_loss.last().unwrap() < &r.train_loss[0]);
    let best = r.val_loss.iter().cloned().fold(f64::INFINITY, f64::min);
    assert_eq!(r.best_val_loss, best);
    assert_eq!(r.val_loss[r.best_epoch - 1], best);
    assert!((r.restored_val_loss - best).abs() < 1e-12);
    assert_eq!((r.train_rows, r.val_rows), (64, 16));
}

#[test]
fn training_rejects_oversized_batches() {
    let data = tiny_dataset(20);
    let mut m = build_model(tiny_config(), 1).unwrap();
    let hyper = TrainHyper {
        batch_size: 17,
        ..tiny_hyper(1)
    };
    assert!(train(&mut m, &data, &hyper, &Sequential, &NoClock, |_| {}).is_err());
}

#[test]
fn learns_an_affine_target() {
    // Rows are s·v for one fixed pattern v, so the target 0.5 + 0.3·s is an
    // affine function of every feature.
    let mut data = tiny_dataset(200);
    let mut rng = stream(17, &[]);
    let w = data.row_len();
    let v: Vec<f32> = (0..w).map(|_| rng.random_range(-1.0f32..1.0)).collect();
    let s: Vec<f32> = (0..200).map(|_| rng.random_range(-1.0f32..1.0)).collect();
    data.features = s.iter().flat_map(|&a| v.iter().map(move |&x| a * x)).collect();
    data.targets = s.iter().map(|&a| 0.5 + 0.3 * a).collect();
    let mut m = build_model(ModelConfig::default(), 2).unwrap();
    let hyper = TrainHyper {
        epochs: 100,
        ..TrainHyper::default()
    };
    let r = train(&mut m, &data, &hyper, &Sequential, &NoClock, |_| {}).unwrap();
    assert!(r.stopped_epoch <= 100);
    assert!(r.restored_val_loss < 1e-4, "{}", r.restored_val_loss);
}

#[test]
fn zero_epochs_leave_weights_untouched() {
    let data = tiny_dataset(20);
    let mut m = build_model(tiny_config(), 1).unwrap();
    let before = m.clone();
    let r = train(&mut m, &data, &tiny_hyper(0), &Sequential, &NoClock, |_| {}).unwrap();
    assert_eq!(m.params, before.params);
    assert!(r.train_loss.is_empty() && r.val_loss.is_empty() && r.lr.is_empty());
    assert_eq!((r.stopped_epoch, r.best_epoch), (0, 0));
}

/// Model whose only nonzero parameter is the head bias, so it outputs `y` everywhere.
fn constant_model(y: f64, data: &beamnet_core::chansim::Dataset) -> beamnet_core::brainet::Model {
    let mut m = build_model(tiny_config(), 0).unwrap();
    for p in m.params.iter_mut() {
        p.data_mut().fill(0.0);
    }
    m.param_mut("head.bias").unwrap().data_mut()[0] = y;
    m.norm_meta = Some(data.norm_meta);
    m
}

#[test]
fn constant_predictors_score_as_expected() {
    let data = tiny_dataset(120);
    let cb = build_codebook(32, 8, 2);
    let budget = LinkBudget::from_db(data.config.label_snr_db, data.config.mmwave_subcarriers);
    let r = evaluate(&constant_model(0.0, &data), &data, &cb, &budget, 0, &Sequential).unwrap();
    let zeros = data.samples.iter().filter(|s| s.oracle_beam == 0).count() as f64 / 120.0;
    assert_eq!(r.top1, zeros);

    // Restricted to users sharing one oracle beam, predicting it is the oracle.
    let beam = data.samples[0].oracle_beam;
    let keep: Vec<usize> = (0..data.len()).filter(|&i| data.samples[i].oracle_beam == beam).collect();
    let mut same = data.clone();
    same.samples = keep.iter().map(|&i| data.samples[i].clone()).collect();
    same.features = keep.iter().flat_map(|&i| data.feature_row(i).to_vec()).collect();
    same.targets = keep.iter().map(|&i| data.targets[i]).collect();
    let r = evaluate(&constant_model(data.norm_meta.target(beam), &same), &same, &cb, &budget, 0, &Sequential).unwrap();
    assert_eq!((r.top1, r.top5, r.top5_ranked), (1.0, 1.0, 1.0));
    assert!((r.se_ratio - 1.0).abs() < 1e-12);
}

/// No-ties closed form 1 − 6Σd²/(n(n²−1)).
fn spearman_oracle(x: &[f64], y: &[f64]) -> f64 {
    let rank = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .map(|a| 1.0 + v.iter().filter(|b| *b < a).count() as f64)
            .collect()
    };
    let (rx, ry) = (rank(x), rank(y));
    let n = x.len() as f64;
    let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b) * (a - b)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

#[test]
fn spearman_matches_closed_form() {
    for case in 0..100u64 {
        let mut rng = stream(31, &[case]);
        let n = rng.random_range(3..40);
        let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        assert!((spearman(&x, &y) - spearman_oracle(&x, &y)).abs() < 1e-12);
    }
    assert!(spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_nan());
}

#[test]
fn bootstrap_interval_covers_the_mean() {
    // 95% intervals of a sample mean should cover the true mean about 95% of the time.
    let trials = 200;
    let mut covered = 0;
    for t in 0..trials {
        let mut rng = stream(41, &[t]);
        let x: Vec<f64> = (0..100).map(|_| rng.random::<f64>()).collect();
        let (lo, hi) = bootstrap_ci(x.len(), 400, 0.95, t, |idx| {
            idx.iter().map(|&i| x[i]).sum::<f64>() / idx.len() as f64
        });
        assert!(lo <= hi);
        if lo <= 0.5 && 0.5 <= hi {
            covered += 1;
        }
    }
    let rate = covered as f64 / trials as f64;
    assert!((0.88..=0.99).contains(&rate), "{rate}");
}

proptest! {
    #[test]
    fn moving_min_matches_brute_force(x in prop::collection::vec(-10.0f64..10.0, 1..50), w in 1usize..10) {
        let m = moving_min(&x, w);
        for i in 0..x.len() {
            let lo = i.saturating_sub(w - 1);
            let want = x[lo..=i].iter().cloned().fold(f64::INFINITY, f64::min);
            prop_assert_eq!(m[i], want);
        }
    }

    #[test]
    fn top_k_window_holds_k_nearest(y in -0.2f64..1.2, n in 1usize..600, k in 1usize..12) {
        let hits: Vec<usize> = (0..n).filter(|&b| top_k_hit(y, b, n, k)).collect();
        prop_assert_eq!(hits.len(), k.min(n));
        prop_assert_eq!(hits[hits.len() - 1] - hits[0] + 1, hits.len());
        // Nothing outside the window is nearer to the continuous position.
        let pos = y.clamp(0.0, 1.0) * (n.max(2) - 1) as f64;
        let inside = hits.iter().map(|&b| (b as f64 - pos).abs()).fold(0.0, f64::max);
        for b in 0..n {
            if !hits.contains(&b) {
                prop_assert!((b as f64 - pos).abs() >= inside - 1e-9);
            }
        }
    }
}
