use std::fs;
use std::path::{Path, PathBuf};

use beamnet_core::brainet::{Model, ModelConfig};
use beamnet_core::chansim::{NormMeta, ScenarioConfig};
use beamnet_core::harness::TrainHyper;
use beamnet_core::tensorkit::Tensor;
use serde::{Deserialize, Serialize};

use super::{read_file, Reader, Writer};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"CBWT";
const VERSION: u32 = 1;

/// Everything inference needs besides the weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub model_config: ModelConfig,
    pub norm_meta: NormMeta,
    /// Scenario the training data came from.
    pub scenario: ScenarioConfig,
    pub hyper: TrainHyper,
}

/// `model.ckpt` → `model.ckpt.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Parameter manifest (name, shape) followed by the f64 arrays.
pub fn save_checkpoint(model: &Model, sidecar: &Sidecar, path: &Path) -> Result<()> {
    let mut w = Writer::new(MAGIC, VERSION);
    w.u32(model.params.len() as u32);
    for (name, t) in model.names.iter().zip(&model.params) {
        w.blob(name.as_bytes());
        w.u32(t.rank() as u32);
        for &d in t.shape() {
            w.u64(d as u64);
        }
    }
    for t in &model.params {
        w.f64s(t.data().iter().copied());
    }
    w.finish(path)?;
    let side = sidecar_path(path);
    let json = serde_json::to_string_pretty(sidecar).expect("sidecar serializes");
    fs::write(&side, json + "\n").map_err(|e| Error::io(&side, e))
}

pub fn load_checkpoint(path: &Path) -> Result<(Model, Sidecar)> {
    let side = sidecar_path(path);
    let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let sidecar: Sidecar = serde_json::from_str(&text).map_err(|e| Error::format(&side, e.to_string()))?;
    let buf = read_file(path)?;
    let mut r = Reader::open(&buf, path, MAGIC, VERSION)?;
    let count = r.u32()? as usize;
    let mut manifest = Vec::with_capacity(count);
    for _ in 0..count {
        let name = String::from_utf8(r.blob()?.to_vec()).map_err(|_| r.error("parameter name is not UTF-8"))?;
        let rank = r.u32()? as usize;
        let shape = (0..rank).map(|_| r.count()).collect::<Result<Vec<_>>>()?;
        manifest.push((name, shape));
    }
    let mut tensors = Vec::with_capacity(count);
    for (name, shape) in manifest {
        let n = shape.iter().try_fold(1usize, |a, &d| a.checked_mul(d)).ok_or_else(|| r.error("shape overflow"))?;
        let t = Tensor::new(&shape, r.f64s(n)?)?;
        tensors.push((name, t));
    }
    r.finish()?;
    let model = Model::from_parts(sidecar.model_config.clone(), tensors, Some(sidecar.norm_meta))
        .map_err(|e| r.error(format!("checkpoint does not match its model config: {e}")))?;
    Ok((model, sidecar))
}
