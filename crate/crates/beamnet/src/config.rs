//! Flat `key = value` config files with `#` comments.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use beamnet_core::brainet::ModelConfig;
use beamnet_core::chansim::{AntennaDims, MacKind, Scenario, ScenarioConfig};
use beamnet_core::harness::TrainHyper;
use beamnet_core::tensorkit::LossKind;

use crate::{Error, Result};

/// Parsed entries, remembering line numbers for diagnostics.
#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    pub path: PathBuf,
    entries: BTreeMap<String, (usize, String)>,
}

impl ConfigFile {
    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Config {
                path: path.to_path_buf(),
                line: i + 1,
                message,
            };
            let (k, v) = line.split_once('=').ok_or_else(|| err(format!("expected `key = value`, got {line:?}")))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || v.is_empty() {
                return Err(err("empty key or value".into()));
            }
            if entries.insert(k.to_string(), (i + 1, v.to_string())).is_some() {
                return Err(err(format!("duplicate key {k}")));
            }
        }
        Ok(ConfigFile {
            path: path.to_path_buf(),
            entries,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(path, &text)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, (_, v))| (k.as_str(), v.as_str()))
    }

    fn error(&self, key: &str, message: impl Display) -> Error {
        Error::Config {
            path: self.path.clone(),
            line: self.entries.get(key).map_or(0, |e| e.0),
            message: format!("{key}: {message}"),
        }
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some((_, v)) => v.parse().map(Some).map_err(|e| self.error(key, e)),
        }
    }

    fn reject_unknown(&self, known: &[&str]) -> Result<()> {
        match self.entries.keys().find(|k| !known.contains(&k.as_str())) {
            Some(k) => Err(self.error(k, "unknown key")),
            None => Ok(()),
        }
    }
}

const SCENARIO_KEYS: &[&str] = &[
    "scenario",
    "mac",
    "n_basestations",
    "n_users",
    "mmwave_antenna",
    "sub6_antenna",
    "antenna_spacing",
    "n_paths",
    "n_beams",
    "sub6_subcarriers",
    "mmwave_subcarriers",
    "velocity_min",
    "velocity_max",
    "distance_min",
    "distance_max",
    "blockage_prob",
    "carrier_freq_sub6",
    "carrier_freq_mmwave",
    "bandwidth_sub6",
    "bandwidth_dsrc",
    "bandwidth_mmwave",
    "label_snr_db",
    "base_seed",
];

fn antenna(cfg: &ConfigFile, key: &str) -> Result<Option<AntennaDims>> {
    let Some(v) = cfg.get::<String>(key)? else { return Ok(None) };
    let parts: Vec<&str> = v.split('x').collect();
    let nums: Option<Vec<usize>> = parts.iter().map(|p| p.trim().parse().ok()).collect();
    match nums.as_deref() {
        Some(&[x, y, z]) => Ok(Some(AntennaDims::new(x, y, z))),
        _ => Err(cfg.error(key, "expected XxYxZ element counts, e.g. 1x32x8")),
    }
}

/// Scenario defaults overridden by the file's entries.
pub fn scenario_config(cfg: &ConfigFile) -> Result<ScenarioConfig> {
    cfg.reject_unknown(SCENARIO_KEYS)?;
    let scenario = match cfg.get::<String>("scenario")? {
        None => Scenario::Urban,
        Some(s) => Scenario::parse(&s).ok_or_else(|| cfg.error("scenario", "expected urban, rural or highway"))?,
    };
    let mut c = ScenarioConfig::new(scenario);
    if let Some(s) = cfg.get::<String>("mac")? {
        c.mac = MacKind::parse(&s).ok_or_else(|| cfg.error("mac", "expected c-v2x or ieee-802.11bd"))?;
    }
    macro_rules! set {
        ($($key:literal => $field:expr),* $(,)?) => {
            $(if let Some(v) = cfg.get($key)? { $field = v; })*
        };
    }
    set! {
        "n_basestations" => c.n_basestations,
        "n_users" => c.n_users,
        "antenna_spacing" => c.antenna_spacing,
        "n_paths" => c.n_paths,
        "n_beams" => c.n_beams,
        "sub6_subcarriers" => c.sub6_subcarriers,
        "mmwave_subcarriers" => c.mmwave_subcarriers,
        "velocity_min" => c.velocity_range.lo,
        "velocity_max" => c.velocity_range.hi,
        "distance_min" => c.distance_range.lo,
        "distance_max" => c.distance_range.hi,
        "blockage_prob" => c.blockage_prob,
        "carrier_freq_sub6" => c.carrier_freq_sub6,
        "carrier_freq_mmwave" => c.carrier_freq_mmwave,
        "bandwidth_sub6" => c.bandwidth_sub6,
        "bandwidth_dsrc" => c.bandwidth_dsrc,
        "bandwidth_mmwave" => c.bandwidth_mmwave,
        "label_snr_db" => c.label_snr_db,
        "base_seed" => c.base_seed,
    }
    if let Some(a) = antenna(cfg, "mmwave_antenna")? {
        c.mmwave_antenna = a;
    }
    if let Some(a) = antenna(cfg, "sub6_antenna")? {
        c.sub6_antenna = a;
    }
    c.validate().map_err(|e| cfg.error("scenario", e))?;
    Ok(c)
}

const TRAIN_KEYS: &[&str] = &[
    "epochs",
    "batch_size",
    "train_fraction",
    "learning_rate",
    "l2_lambda",
    "loss",
    "huber_delta",
    "lr_patience",
    "lr_factor",
    "min_lr",
    "early_stop_patience",
    "data_fraction",
    "seed",
    "n_heads",
    "d_model",
    "dense_units",
    "dropout",
];

/// Training hyperparameters and model shape from a train config file.
pub fn training_config(cfg: &ConfigFile) -> Result<(TrainHyper, ModelConfig)> {
    cfg.reject_unknown(TRAIN_KEYS)?;
    let mut h = TrainHyper::default();
    let mut m = ModelConfig::default();
    macro_rules! set {
        ($($key:literal => $field:expr),* $(,)?) => {
            $(if let Some(v) = cfg.get($key)? { $field = v; })*
        };
    }
    set! {
        "epochs" => h.epochs,
        "batch_size" => h.batch_size,
        "train_fraction" => h.train_fraction,
        "learning_rate" => h.learning_rate,
        "l2_lambda" => h.l2_lambda,
        "lr_patience" => h.lr_patience,
        "lr_factor" => h.lr_factor,
        "min_lr" => h.min_lr,
        "early_stop_patience" => h.early_stop_patience,
        "data_fraction" => h.data_fraction,
        "seed" => h.seed,
        "n_heads" => m.n_heads,
        "d_model" => m.d_model,
        "dense_units" => m.dense_units,
        "dropout" => m.dropout,
    }
    let delta = cfg.get::<f64>("huber_delta")?;
    if let Some(l) = cfg.get::<String>("loss")? {
        h.loss = parse_loss(&l, delta).ok_or_else(|| cfg.error("loss", "expected huber, mae or rmse"))?;
    } else if let Some(d) = delta {
        h.loss = LossKind::Huber { delta: d };
    }
    if let Some(last) = m.conv_layers.last_mut() {
        last.out_ch = m.d_model;
    }
    h.validate().map_err(|e| cfg.error("hyperparameters", e))?;
    m.validate().map_err(|e| cfg.error("model", e))?;
    Ok((h, m))
}

pub fn parse_loss(s: &str, delta: Option<f64>) -> Option<LossKind> {
    match s.to_ascii_lowercase().as_str() {
        "huber" | "hl" => Some(delta.map_or_else(LossKind::huber, |d| LossKind::Huber { delta: d })),
        "mae" => Some(LossKind::Mae),
        "rmse" => Some(LossKind::Rmse),
        _ => None,
    }
}

/// The config as `key = value` lines, every key explicit.
pub fn render_scenario(c: &ScenarioConfig) -> Vec<(String, String)> {
    let dims = |a: AntennaDims| format!("{}x{}x{}", a.x, a.y, a.z);
    vec![
        ("scenario".into(), c.scenario.name().into()),
        ("mac".into(), c.mac.name().into()),
        ("n_basestations".into(), c.n_basestations.to_string()),
        ("n_users".into(), c.n_users.to_string()),
        ("mmwave_antenna".into(), dims(c.mmwave_antenna)),
        ("sub6_antenna".into(), dims(c.sub6_antenna)),
        ("antenna_spacing".into(), c.antenna_spacing.to_string()),
        ("n_paths".into(), c.n_paths.to_string()),
        ("n_beams".into(), c.n_beams.to_string()),
        ("sub6_subcarriers".into(), c.sub6_subcarriers.to_string()),
        ("mmwave_subcarriers".into(), c.mmwave_subcarriers.to_string()),
        ("velocity_min".into(), c.velocity_range.lo.to_string()),
        ("velocity_max".into(), c.velocity_range.hi.to_string()),
        ("distance_min".into(), c.distance_range.lo.to_string()),
        ("distance_max".into(), c.distance_range.hi.to_string()),
        ("blockage_prob".into(), c.blockage_prob.to_string()),
        ("carrier_freq_sub6".into(), c.carrier_freq_sub6.to_string()),
        ("carrier_freq_mmwave".into(), c.carrier_freq_mmwave.to_string()),
        ("bandwidth_sub6".into(), c.bandwidth_sub6.to_string()),
        ("bandwidth_dsrc".into(), c.bandwidth_dsrc.to_string()),
        ("bandwidth_mmwave".into(), c.bandwidth_mmwave.to_string()),
        ("label_snr_db".into(), c.label_snr_db.to_string()),
        ("base_seed".into(), c.base_seed.to_string()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ConfigFile> {
        ConfigFile::parse(Path::new("t.cfg"), text)
    }

    #[test]
    fn comments_and_overrides() {
        let cfg = parse("# rural run\nscenario = rural\nn_users = 12 # small\nmmwave_antenna = 1x32x8\n").unwrap();
        let c = scenario_config(&cfg).unwrap();
        assert_eq!(c.scenario, Scenario::Rural);
        assert_eq!(c.n_users, 12);
        assert_eq!(c.n_basestations, 3);
    }

    #[test]
    fn unknown_key_names_line() {
        let cfg = parse("scenario = urban\n\nfoo = 1\n").unwrap();
        match scenario_config(&cfg) {
            Err(Error::Config { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("foo"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn round_trips_through_render() {
        let mut c = ScenarioConfig::new(Scenario::Highway);
        c.base_seed = 99;
        c.label_snr_db = 7.5;
        let text: String = render_scenario(&c).iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
        assert_eq!(scenario_config(&parse(&text).unwrap()).unwrap(), c);
    }

    #[test]
    fn bad_heads_rejected() {
        assert!(training_config(&parse("n_heads = 5\n").unwrap()).is_err());
        let (h, m) = training_config(&parse("n_heads = 8\nloss = mae\nepochs = 3\n").unwrap()).unwrap();
        assert_eq!((h.epochs, h.loss, m.n_heads), (3, LossKind::Mae, 8));
    }
}
