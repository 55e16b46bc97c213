use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// JSON record of one command invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub tool_version: String,
    pub config_path: Option<PathBuf>,
    /// Fully resolved settings, every default made explicit.
    pub config: BTreeMap<String, String>,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: Vec<PathBuf>,
    pub artifacts: Vec<PathBuf>,
    pub started: String,
    pub finished: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub summary: BTreeMap<String, f64>,
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        RunManifest {
            command: command.into(),
            argv: std::env::args().collect(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            config_path: None,
            config: BTreeMap::new(),
            seeds: BTreeMap::new(),
            inputs: Vec::new(),
            artifacts: Vec::new(),
            started: now(),
            finished: String::new(),
            summary: BTreeMap::new(),
        }
    }

    /// Stamps the end time and writes the manifest after checking that every
    /// listed artifact exists.
    pub fn write(mut self, path: &Path) -> Result<()> {
        for a in &self.artifacts {
            if !a.exists() {
                return Err(Error::io(a, std::io::Error::new(std::io::ErrorKind::NotFound, "artifact missing")));
            }
        }
        self.finished = now();
        let json = serde_json::to_string_pretty(&self).expect("manifest serializes");
        fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
    }
}

/// `out.ds` → `out.ds.manifest.json`.
pub fn manifest_path(artifact: &Path) -> PathBuf {
    let mut s = artifact.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}
