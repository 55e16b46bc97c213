//! `beamnet gen | train | eval | sweep | report | compare-losses`.
//!
//! Failures print one `error kind=… code=… message="…"` line on stderr and
//! exit with 2 (arguments), 3 (I/O), 4 (format or validation) or 5 (numeric).

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use beamnet_core::beamspace::{build_codebook, LinkBudget};
use beamnet_core::brainet::{build_model, Model};
use beamnet_core::chansim::{
    generate_dataset, generate_samples, Dataset, Kinematics, MacKind, Scenario, ScenarioConfig,
};
use beamnet_core::harness::{
    compare_losses, default_distance_grid, default_snr_grid, default_velocity_grid, evaluate, sweep_doppler,
    sweep_snr, sweep_velocity_distance, Clock, LossDensity, SweepResult, SweepSettings, TrainHyper,
};
use beamnet_core::tensorkit::LossKind;
use clap::{Parser, Subcommand, ValueEnum};

use crate::config::{render_scenario, scenario_config, training_config, ConfigFile};
use crate::format::{load_checkpoint, load_dataset, save_checkpoint, save_codebook, save_dataset, sidecar_path, Sidecar};
use crate::manifest::{manifest_path, RunManifest};
use crate::pool::Pool;
use crate::{csvout, Error, Result};

#[derive(Debug, Parser)]
#[command(name = "beamnet", version, about = "Sub-6 GHz aided mm-wave beam prediction lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Axis {
    Snr,
    Velocity,
    Distance,
    Doppler,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a paired-channel dataset.
    Gen {
        /// Scenario config file (`key = value` lines).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Base seed; overrides the config's base_seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Scenario when no config file is given.
        #[arg(long)]
        scenario: Option<String>,
        /// Number of users; overrides the config.
        #[arg(long)]
        users: Option<usize>,
        /// Also dump the codebook here.
        #[arg(long)]
        codebook_out: Option<PathBuf>,
    },
    /// Train a model on a dataset.
    Train {
        dataset: PathBuf,
        #[arg(long)]
        model_out: PathBuf,
        /// Training config file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Seed for initialization, shuffling and dropout.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        epochs: Option<usize>,
        /// Suppress per-epoch progress on stderr.
        #[arg(long)]
        quiet: bool,
    },
    /// Evaluate a checkpoint on the held-out split of a dataset.
    Eval {
        model: PathBuf,
        dataset: PathBuf,
        #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
        snr_db: f64,
        /// Metrics CSV; defaults to `<model>.eval.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Score every row instead of the held-out split.
        #[arg(long)]
        all_rows: bool,
        /// Bootstrap seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Sweep SNR, velocity, distance or Doppler and write plot data.
    Sweep {
        model: PathBuf,
        #[arg(long, value_enum)]
        axis: Axis,
        #[arg(long)]
        out: PathBuf,
        /// Dataset for the SNR sweep (held-out split); fresh users otherwise.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Users per grid point.
        #[arg(long, default_value_t = 500)]
        samples: usize,
        /// Base seed of the fresh users; defaults to the training scenario's.
        #[arg(long)]
        seed: Option<u64>,
        /// MAC profile (c-v2x or ieee-802.11bd); defaults to the scenario's.
        #[arg(long)]
        mac: Option<String>,
        /// Link SNR for the kinematic sweeps.
        #[arg(long, allow_negative_numbers = true)]
        snr_db: Option<f64>,
    },
    /// Summarize every manifest in a run directory.
    Report { run_dir: PathBuf },
    /// Train one model per (density, loss, fraction) cell and tabulate held-out metrics.
    CompareLosses {
        #[arg(long)]
        sparse: PathBuf,
        #[arg(long)]
        dense: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.5, 0.9])]
        fractions: Vec<f64>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

struct WallClock(Instant);

impl Clock for WallClock {
    fn seconds(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

/// Parses `std::env::args` and runs; returns the process exit code.
pub fn main() -> i32 {
    run(std::env::args_os())
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    crate::pool::flush_subnormals();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error kind=args code=2 message={first:?}");
            return 2;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            let code = e.exit_code();
            eprintln!("error kind={} code={code} message={:?}", e.kind(), e.to_string().replace('\n', " "));
            code
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Gen {
            config,
            seed,
            out,
            scenario,
            users,
            codebook_out,
        } => cmd_gen(config, seed, &out, scenario, users, codebook_out),
        Command::Train {
            dataset,
            model_out,
            config,
            seed,
            epochs,
            quiet,
        } => cmd_train(&dataset, &model_out, config, seed, epochs, quiet),
        Command::Eval {
            model,
            dataset,
            snr_db,
            out,
            all_rows,
            seed,
        } => cmd_eval(&model, &dataset, snr_db, out, all_rows, seed),
        Command::Sweep {
            model,
            axis,
            out,
            dataset,
            samples,
            seed,
            mac,
            snr_db,
        } => cmd_sweep(&model, axis, &out, dataset, samples, seed, mac, snr_db),
        Command::Report { run_dir } => cmd_report(&run_dir),
        Command::CompareLosses {
            sparse,
            dense,
            out,
            config,
            fractions,
            epochs,
            seed,
        } => cmd_compare_losses(&sparse, &dense, &out, config, &fractions, epochs, seed),
    }
}

fn scenario_map(c: &ScenarioConfig) -> BTreeMap<String, String> {
    render_scenario(c).into_iter().collect()
}

fn hyper_map(h: &TrainHyper, m: &beamnet_core::brainet::ModelConfig) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    let mut put = |k: &str, v: String| {
        out.insert(k.to_string(), v);
    };
    put("epochs", h.epochs.to_string());
    put("batch_size", h.batch_size.to_string());
    put("train_fraction", h.train_fraction.to_string());
    put("learning_rate", h.learning_rate.to_string());
    put("l2_lambda", h.l2_lambda.to_string());
    put("loss", h.loss.name().to_string());
    if let LossKind::Huber { delta } = h.loss {
        put("huber_delta", delta.to_string());
    }
    put("lr_patience", h.lr_patience.to_string());
    put("lr_factor", h.lr_factor.to_string());
    put("min_lr", h.min_lr.to_string());
    put("early_stop_patience", h.early_stop_patience.to_string());
    put("data_fraction", h.data_fraction.to_string());
    put("seed", h.seed.to_string());
    put("n_heads", m.n_heads.to_string());
    put("d_model", m.d_model.to_string());
    put("dense_units", m.dense_units.to_string());
    put("dropout", m.dropout.to_string());
    out
}

fn cmd_gen(
    config: Option<PathBuf>,
    seed: Option<u64>,
    out: &Path,
    scenario: Option<String>,
    users: Option<usize>,
    codebook_out: Option<PathBuf>,
) -> Result<()> {
    let mut cfg = match (&config, &scenario) {
        (Some(_), Some(_)) => return Err(Error::Args("--config and --scenario are mutually exclusive".into())),
        (Some(p), None) => scenario_config(&ConfigFile::load(p)?)?,
        (None, Some(s)) => ScenarioConfig::new(
            Scenario::parse(s).ok_or_else(|| Error::Args(format!("unknown scenario {s:?}")))?,
        ),
        (None, None) => ScenarioConfig::new(Scenario::Urban),
    };
    if let Some(s) = seed {
        cfg.base_seed = s;
    }
    if let Some(n) = users {
        cfg.n_users = n;
    }
    cfg.validate()?;
    let pool = Pool::from_env();
    let dataset = generate_dataset(&cfg, &pool)?;
    save_dataset(&dataset, out)?;
    let mut m = RunManifest::new("gen");
    m.config_path = config;
    m.config = scenario_map(&cfg);
    m.seeds.insert("base_seed".into(), cfg.base_seed);
    m.artifacts.push(out.to_path_buf());
    if let Some(cb) = codebook_out {
        let codebook = build_codebook(cfg.mmwave_antenna.y, cfg.mmwave_antenna.z, cfg.azimuth_oversampling());
        save_codebook(&codebook, &cb)?;
        m.artifacts.push(cb);
    }
    let los = dataset.samples.iter().filter(|s| s.los).count();
    m.summary.insert("samples".into(), dataset.len() as f64);
    m.summary.insert("los_fraction".into(), los as f64 / dataset.len().max(1) as f64);
    println!("samples {}", dataset.len());
    println!("los_fraction {:.4}", los as f64 / dataset.len().max(1) as f64);
    println!("feature_scale {:e}", dataset.norm_meta.feature_scale);
    m.write(&manifest_path(out))
}

fn train_csv_path(model_out: &Path) -> PathBuf {
    let mut s = model_out.as_os_str().to_owned();
    s.push(".train.csv");
    PathBuf::from(s)
}

fn cmd_train(
    dataset_path: &Path,
    model_out: &Path,
    config: Option<PathBuf>,
    seed: Option<u64>,
    epochs: Option<usize>,
    quiet: bool,
) -> Result<()> {
    let (mut hyper, model_config) = match &config {
        Some(p) => training_config(&ConfigFile::load(p)?)?,
        None => (TrainHyper::default(), Default::default()),
    };
    if let Some(s) = seed {
        hyper.seed = s;
    }
    if let Some(e) = epochs {
        hyper.epochs = e;
    }
    let dataset = load_dataset(dataset_path)?;
    let mut model = build_model(model_config.clone(), hyper.seed)?;
    println!("params {}", model.param_count());
    let pool = Pool::from_env();
    let clock = WallClock(Instant::now());
    let report = beamnet_core::harness::train(&mut model, &dataset, &hyper, &pool, &clock, |r| {
        if !quiet {
            eprintln!(
                "epoch {} train_loss {:.6e} val_loss {:.6e} lr {:e} t {:.1}s",
                r.epoch,
                r.train_loss,
                r.val_loss,
                r.lr,
                clock.seconds()
            );
        }
    })?;
    let sidecar = Sidecar {
        model_config: model_config.clone(),
        norm_meta: dataset.norm_meta,
        scenario: dataset.config.clone(),
        hyper: hyper.clone(),
    };
    save_checkpoint(&model, &sidecar, model_out)?;
    let csv = train_csv_path(model_out);
    csvout::write_train(&csv, &report)?;
    println!("epochs {}", report.stopped_epoch);
    println!("best_epoch {}", report.best_epoch);
    println!("best_val_loss {:.6e}", report.best_val_loss);
    println!("val_mae {:.6}", report.final_mae);
    println!("val_rmse {:.6}", report.final_rmse);
    println!("wall_clock_s {:.1}", report.wall_clock_s);
    let mut m = RunManifest::new("train");
    m.config_path = config;
    m.config = hyper_map(&hyper, &model_config);
    m.seeds.insert("train_seed".into(), hyper.seed);
    m.seeds.insert("dataset_base_seed".into(), dataset.config.base_seed);
    m.inputs.push(dataset_path.to_path_buf());
    m.artifacts.extend([model_out.to_path_buf(), sidecar_path(model_out), csv]);
    m.summary.insert("epochs".into(), report.stopped_epoch as f64);
    m.summary.insert("best_epoch".into(), report.best_epoch as f64);
    m.summary.insert("best_val_loss".into(), report.best_val_loss);
    m.summary.insert("val_mae".into(), report.final_mae);
    m.summary.insert("val_rmse".into(), report.final_rmse);
    m.summary.insert("wall_clock_s".into(), report.wall_clock_s);
    m.summary.insert("param_count".into(), model.param_count() as f64);
    m.write(&manifest_path(model_out))
}

fn held_out(dataset: &Dataset, sidecar: &Sidecar) -> Dataset {
    let (_, val) = dataset.split(sidecar.hyper.train_fraction);
    dataset.subset(val)
}

fn cmd_eval(model_path: &Path, dataset_path: &Path, snr_db: f64, out: Option<PathBuf>, all_rows: bool, seed: u64) -> Result<()> {
    if !snr_db.is_finite() {
        return Err(Error::Args("--snr-db must be finite".into()));
    }
    let (model, sidecar) = load_checkpoint(model_path)?;
    let dataset = load_dataset(dataset_path)?;
    let rows = if all_rows { dataset } else { held_out(&dataset, &sidecar) };
    let cfg = &rows.config;
    let codebook = build_codebook(cfg.mmwave_antenna.y, cfg.mmwave_antenna.z, cfg.azimuth_oversampling());
    let budget = LinkBudget::from_db(snr_db, cfg.mmwave_subcarriers);
    let pool = Pool::from_env();
    let r = evaluate(&model, &rows, &codebook, &budget, seed, &pool)?;
    let params = model.param_count();
    println!("params {params}");
    println!("n {}", r.n);
    println!("snr_db {}", r.snr_db);
    println!("mae {:.6}", r.mae);
    println!("rmse {:.6}", r.rmse);
    println!("mean_se {:.6}", r.mean_se);
    println!("oracle_se {:.6}", r.oracle_se);
    println!("se_ratio {:.6} ci95 {:.6} {:.6}", r.se_ratio, r.se_ratio_ci.0, r.se_ratio_ci.1);
    println!("top1 {:.6}", r.top1);
    println!("top5 {:.6} ci95 {:.6} {:.6}", r.top5, r.top5_ci.0, r.top5_ci.1);
    println!("top5_ranked {:.6}", r.top5_ranked);
    let csv = out.unwrap_or_else(|| {
        let mut s = model_path.as_os_str().to_owned();
        s.push(".eval.csv");
        PathBuf::from(s)
    });
    csvout::write_eval(&csv, &r, params)?;
    let mut m = RunManifest::new("eval");
    m.config.insert("snr_db".into(), snr_db.to_string());
    m.config.insert("rows".into(), if all_rows { "all" } else { "held-out" }.into());
    m.seeds.insert("bootstrap_seed".into(), seed);
    m.inputs.extend([model_path.to_path_buf(), dataset_path.to_path_buf()]);
    m.artifacts.push(csv.clone());
    for (k, v) in [("mae", r.mae), ("rmse", r.rmse), ("mean_se", r.mean_se), ("se_ratio", r.se_ratio), ("top1", r.top1), ("top5", r.top5), ("top5_ranked", r.top5_ranked)] {
        m.summary.insert(k.into(), v);
    }
    m.summary.insert("param_count".into(), params as f64);
    m.write(&manifest_path(&csv))
}

/// Fresh users normalized with the model's constants, as a dataset.
fn fresh_dataset(model: &Model, cfg: &ScenarioConfig, settings: &SweepSettings, pool: &Pool) -> Result<Dataset> {
    let meta = model
        .norm_meta
        .ok_or_else(|| beamnet_core::Error::MetaMismatch("checkpoint has no normalization".into()))?;
    let start = settings.first_index;
    let generated = generate_samples(cfg, start..start + settings.samples_per_point, Kinematics::default(), pool)?;
    let mut features = Vec::new();
    let mut targets = Vec::new();
    let mut samples = Vec::new();
    for g in generated {
        features.extend(meta.apply(&g.raw_features));
        targets.push(meta.target(g.sample.oracle_beam) as f32);
        samples.push(g.sample);
    }
    Ok(Dataset {
        samples,
        features,
        targets,
        norm_meta: meta,
        config: cfg.clone(),
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    model_path: &Path,
    axis: Axis,
    out: &Path,
    dataset_path: Option<PathBuf>,
    samples: usize,
    seed: Option<u64>,
    mac: Option<String>,
    snr_db: Option<f64>,
) -> Result<()> {
    if samples == 0 {
        return Err(Error::Args("--samples must be at least 1".into()));
    }
    let (model, sidecar) = load_checkpoint(model_path)?;
    let mut cfg = sidecar.scenario.clone();
    if let Some(s) = seed {
        cfg.base_seed = s;
    }
    if let Some(m) = &mac {
        cfg.mac = MacKind::parse(m).ok_or_else(|| Error::Args(format!("unknown MAC profile {m:?}")))?;
    }
    let codebook = build_codebook(cfg.mmwave_antenna.y, cfg.mmwave_antenna.z, cfg.azimuth_oversampling());
    let mut settings = SweepSettings::for_config(&cfg);
    settings.samples_per_point = samples;
    if let Some(s) = snr_db {
        settings.snr_db = s;
    }
    let pool = Pool::from_env();
    let mut m = RunManifest::new("sweep");
    let result: SweepResult = match axis {
        Axis::Snr => {
            let data = match &dataset_path {
                Some(p) => {
                    m.inputs.push(p.clone());
                    held_out(&load_dataset(p)?, &sidecar)
                }
                None => fresh_dataset(&model, &cfg, &settings, &pool)?,
            };
            sweep_snr(&model, &data, &codebook, &default_snr_grid(), &[cfg.mac], &pool)?.remove(0)
        }
        Axis::Velocity => {
            sweep_velocity_distance(&model, &cfg, &codebook, Some(&default_velocity_grid()), None, &settings, &pool)?
        }
        Axis::Distance => {
            sweep_velocity_distance(&model, &cfg, &codebook, None, Some(&default_distance_grid()), &settings, &pool)?
        }
        Axis::Doppler => sweep_doppler(&model, &cfg, &codebook, &default_velocity_grid(), &settings, &pool)?,
    };
    csvout::write_sweep(out, &result)?;
    for r in &result.records {
        println!(
            "{} {} mean_se {:.6} se_ratio {:.6} gain {}",
            r.axis,
            r.value,
            r.mean_se,
            r.se_ratio,
            r.gain.map_or("undefined".to_string(), |g| format!("{g:.6}"))
        );
    }
    m.config = scenario_map(&cfg);
    m.config.insert("axis".into(), format!("{axis:?}").to_lowercase());
    m.config.insert("samples".into(), samples.to_string());
    m.config.insert("first_index".into(), settings.first_index.to_string());
    m.config.insert("snr_db".into(), settings.snr_db.to_string());
    m.seeds.insert("base_seed".into(), cfg.base_seed);
    m.inputs.insert(0, model_path.to_path_buf());
    m.artifacts.push(out.to_path_buf());
    m.write(&manifest_path(out))
}

fn cmd_report(run_dir: &Path) -> Result<()> {
    let entries = fs::read_dir(run_dir).map_err(|e| Error::io(run_dir, e))?;
    let mut manifests: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.to_string_lossy().ends_with(".manifest.json"))
        .filter(|p| !p.to_string_lossy().ends_with("report.txt.manifest.json"))
        .collect();
    manifests.sort();
    let mut text = String::new();
    for p in &manifests {
        let man = RunManifest::load(p)?;
        text.push_str(&format!("## {} ({})\n", man.command, p.file_name().unwrap_or_default().to_string_lossy()));
        for (k, v) in &man.seeds {
            text.push_str(&format!("seed {k} = {v}\n"));
        }
        for a in &man.artifacts {
            let status = if a.exists() { "ok" } else { "missing" };
            text.push_str(&format!("artifact {} [{status}]\n", a.display()));
        }
        for (k, v) in &man.summary {
            text.push_str(&format!("{k} = {v}\n"));
        }
        text.push('\n');
    }
    print!("{text}");
    let out = run_dir.join("report.txt");
    fs::write(&out, &text).map_err(|e| Error::io(&out, e))?;
    let mut m = RunManifest::new("report");
    m.inputs = manifests;
    m.artifacts.push(out.clone());
    m.write(&manifest_path(&out))
}

fn cmd_compare_losses(
    sparse: &Path,
    dense: &Path,
    out: &Path,
    config: Option<PathBuf>,
    fractions: &[f64],
    epochs: Option<usize>,
    seed: Option<u64>,
) -> Result<()> {
    if fractions.is_empty() || fractions.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
        return Err(Error::Args("--fractions must be values in (0, 1]".into()));
    }
    let (mut hyper, model_config) = match &config {
        Some(p) => training_config(&ConfigFile::load(p)?)?,
        None => (TrainHyper::default(), Default::default()),
    };
    if let Some(e) = epochs {
        hyper.epochs = e;
    }
    if let Some(s) = seed {
        hyper.seed = s;
    }
    let (ds, dd) = (load_dataset(sparse)?, load_dataset(dense)?);
    let densities = [
        LossDensity {
            label: "sparse",
            dataset: &ds,
        },
        LossDensity {
            label: "dense",
            dataset: &dd,
        },
    ];
    let losses = [LossKind::huber(), LossKind::Mae, LossKind::Rmse];
    let pool = Pool::from_env();
    let clock = WallClock(Instant::now());
    let cells = compare_losses(&densities, &losses, fractions, &hyper, &model_config, &pool, &clock)?;
    csvout::write_losses(out, &cells)?;
    for c in &cells {
        println!(
            "{} {} {} mae {:.6} rmse {:.6} huber {:.6e} p90 {:.6}",
            c.density,
            c.fraction,
            c.loss.name(),
            c.mae,
            c.rmse,
            c.huber,
            c.worst_decile
        );
    }
    let mut m = RunManifest::new("compare-losses");
    m.config_path = config;
    m.config = hyper_map(&hyper, &model_config);
    m.config.insert(
        "fractions".into(),
        fractions.iter().map(|f| f.to_string()).collect::<Vec<_>>().join(","),
    );
    m.seeds.insert("train_seed".into(), hyper.seed);
    m.inputs.extend([sparse.to_path_buf(), dense.to_path_buf()]);
    m.artifacts.push(out.to_path_buf());
    m.write(&manifest_path(out))
}
