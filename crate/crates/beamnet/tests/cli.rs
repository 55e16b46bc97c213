use std::fs;
use std::path::{Path, PathBuf};

use beamnet::cli::run;
use beamnet::format::load_dataset;
use beamnet::manifest::RunManifest;
use beamnet::pool::Pool;
use beamnet_core::brainet::{build_model, ModelConfig};
use beamnet_core::exec::Sequential;
use beamnet_core::harness::{train, NoClock, TrainHyper};

fn beamnet(args: &[&str]) -> i32 {
    run(std::iter::once("beamnet").chain(args.iter().copied()))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen(dir: &Path, name: &str, seed: &str) -> PathBuf {
    let out = dir.join(name);
    assert_eq!(beamnet(&["gen", "--scenario", "urban", "--users", "60", "--seed", seed, "--out", s(&out)]), 0);
    out
}

fn train_config(dir: &Path) -> PathBuf {
    let p = dir.join("train.cfg");
    fs::write(&p, "# quick run\nbatch_size = 10\nepochs = 2\n").unwrap();
    p
}

fn train_model(dir: &Path, data: &Path, name: &str) -> PathBuf {
    let out = dir.join(name);
    let cfg = train_config(dir);
    assert_eq!(beamnet(&["train", s(data), "--model-out", s(&out), "--config", s(&cfg), "--quiet"]), 0);
    out
}

fn bytes(p: &Path) -> Vec<u8> {
    fs::read(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn with_suffix(p: &Path, suffix: &str) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

#[test]
fn gen_is_byte_identical_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen(dir.path(), "a.cbrn", "5");
    let b = gen(dir.path(), "b.cbrn", "5");
    let c = gen(dir.path(), "c.cbrn", "6");
    assert_eq!(bytes(&a), bytes(&b));
    assert_ne!(bytes(&a), bytes(&c));
    assert_eq!(load_dataset(&a).unwrap().len(), 60);
    let m = RunManifest::load(&with_suffix(&a, ".manifest.json")).unwrap();
    assert_eq!(m.command, "gen");
    assert_eq!(m.seeds["base_seed"], 5);
    assert_eq!(m.config["scenario"], "urban");
}

#[test]
fn train_eval_and_sweep_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen(dir.path(), "d.cbrn", "1");
    let m1 = train_model(dir.path(), &data, "m1.ckpt");
    let m2 = train_model(dir.path(), &data, "m2.ckpt");
    assert_eq!(bytes(&m1), bytes(&m2));
    assert_eq!(bytes(&with_suffix(&m1, ".json")), bytes(&with_suffix(&m2, ".json")));
    assert_eq!(bytes(&with_suffix(&m1, ".train.csv")), bytes(&with_suffix(&m2, ".train.csv")));
    let trace = String::from_utf8(bytes(&with_suffix(&m1, ".train.csv"))).unwrap();
    assert_eq!(trace.lines().next().unwrap(), "epoch,train_loss,val_loss,lr");
    assert_eq!(trace.lines().count(), 3);

    let e1 = dir.path().join("e1.csv");
    let e2 = dir.path().join("e2.csv");
    assert_eq!(beamnet(&["eval", s(&m1), s(&data), "--out", s(&e1)]), 0);
    assert_eq!(beamnet(&["eval", s(&m2), s(&data), "--out", s(&e2)]), 0);
    assert_eq!(bytes(&e1), bytes(&e2));
    let eval = String::from_utf8(bytes(&e1)).unwrap();
    assert!(eval.contains("param_count,297465"));

    for axis in ["snr", "velocity", "distance", "doppler"] {
        let (a, b) = (dir.path().join(format!("{axis}1.csv")), dir.path().join(format!("{axis}2.csv")));
        for (m, out) in [(&m1, &a), (&m2, &b)] {
            assert_eq!(beamnet(&["sweep", s(m), "--axis", axis, "--samples", "12", "--out", s(out)]), 0, "{axis}");
        }
        assert_eq!(bytes(&a), bytes(&b), "{axis}");
        let text = String::from_utf8(bytes(&a)).unwrap();
        assert_eq!(text.lines().next().unwrap(), "axis,value,mean_se,se_ratio,top1,top5,gain,n");
    }

    assert_eq!(beamnet(&["report", s(dir.path())]), 0);
    let report = fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(report.contains("## train") && report.contains("## gen") && !report.contains("[missing]"));
}

#[test]
fn pool_training_matches_sequential() {
    let mut cfg = beamnet_core::chansim::ScenarioConfig::new(beamnet_core::chansim::Scenario::Rural);
    cfg.n_users = 50;
    let data = beamnet_core::chansim::generate_dataset(&cfg, &Pool::new(3)).unwrap();
    assert_eq!(data, beamnet_core::chansim::generate_dataset(&cfg, &Sequential).unwrap());
    let hyper = TrainHyper {
        epochs: 2,
        batch_size: 20,
        ..TrainHyper::default()
    };
    let mut a = build_model(ModelConfig::default(), 9).unwrap();
    let mut b = a.clone();
    let ra = train(&mut a, &data, &hyper, &Sequential, &NoClock, |_| {}).unwrap();
    let rb = train(&mut b, &data, &hyper, &Pool::new(3), &NoClock, |_| {}).unwrap();
    assert_eq!(ra, rb);
    assert_eq!(a.params, b.params);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(beamnet(&["--help"]), 0);
    assert_eq!(beamnet(&["frobnicate"]), 2);
    assert_eq!(beamnet(&["gen"]), 2);
    assert_eq!(beamnet(&["gen", "--scenario", "lunar", "--out", s(&d.join("x"))]), 2);
    assert_eq!(beamnet(&["gen", "--config", s(&d.join("missing.cfg")), "--out", s(&d.join("x"))]), 3);

    let bad = d.join("bad.cfg");
    fs::write(&bad, "scenario = urban\nwarp_factor = 9\n").unwrap();
    assert_eq!(beamnet(&["gen", "--config", s(&bad), "--out", s(&d.join("x"))]), 4);
    assert_eq!(beamnet(&["gen", "--users", "0", "--out", s(&d.join("x"))]), 4);

    let junk = d.join("junk.cbrn");
    fs::write(&junk, b"NOPE\x01\x00\x00\x00").unwrap();
    assert_eq!(beamnet(&["train", s(&junk), "--model-out", s(&d.join("m"))]), 4);
    assert_eq!(beamnet(&["eval", s(&d.join("m")), s(&junk)]), 3);

    let data = gen(d, "d.cbrn", "0");
    // Batch of 100 exceeds the 48 training rows.
    assert_eq!(beamnet(&["train", s(&data), "--model-out", s(&d.join("m")), "--epochs", "1"]), 4);
    let model = train_model(d, &data, "m.ckpt");
    assert_eq!(beamnet(&["sweep", s(&model), "--axis", "snr", "--samples", "0", "--out", s(&d.join("o"))]), 2);
    assert_eq!(beamnet(&["sweep", s(&model), "--axis", "snr", "--mac", "wifi", "--out", s(&d.join("o"))]), 2);

    // A dataset from a different scenario has different normalization constants.
    let other = d.join("o.cbrn");
    assert_eq!(beamnet(&["gen", "--scenario", "rural", "--users", "20", "--out", s(&other)]), 0);
    assert_eq!(beamnet(&["eval", s(&model), s(&other)]), 4);
}
