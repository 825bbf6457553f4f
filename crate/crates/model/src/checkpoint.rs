//! Checkpoint files: a safetensors container whose metadata holds a JSON
//! manifest describing the network that produced the tensors.

use std::collections::HashMap;
use std::path::Path;

use candle_core::{DType, Device, Tensor};
use serde::{Deserialize, Serialize};

use pip_core::grid::GridSpec;
use pip_core::plan::Units;

use crate::config::ModelConfig;
use crate::error::{ModelError, Result};
use crate::network::PipNetwork;
use crate::variant::variant_registry;

pub const FORMAT_VERSION: u32 = 1;
const MANIFEST_KEY: &str = "pip.manifest";

pub fn build_string() -> String {
    format!("{} {} ({})", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"), env!("PIP_GIT_DESCRIBE"))
}

/// Which data a checkpoint was trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingInfo {
    pub dataset: String,
    pub source: String,
    pub split_seed: u64,
    pub seed: u64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub variant: String,
    pub fusion: String,
    pub uses_plan: bool,
    pub model: ModelConfig,
    pub grid: GridSpec,
    pub units: Units,
    pub build: String,
    pub training: Option<TrainingInfo>,
    pub tensors: Vec<TensorEntry>,
}

pub fn manifest_of(network: &PipNetwork, training: Option<&TrainingInfo>) -> Manifest {
    Manifest {
        format_version: FORMAT_VERSION,
        variant: network.variant().to_string(),
        fusion: network.fusion_name().to_string(),
        uses_plan: network.uses_plan(),
        model: *network.config(),
        grid: *network.grid(),
        units: Units::default(),
        build: build_string(),
        training: training.cloned(),
        tensors: network
            .vars()
            .iter()
            .map(|(name, var)| TensorEntry { name: name.clone(), shape: var.dims().to_vec() })
            .collect(),
    }
}

/// Serializes all parameters as f32.
pub fn to_bytes(network: &PipNetwork, training: Option<&TrainingInfo>) -> Result<Vec<u8>> {
    let manifest = manifest_of(network, training);
    let tensors = network
        .vars()
        .iter()
        .map(|(name, var)| Ok((name.clone(), var.as_tensor().to_dtype(DType::F32)?)))
        .collect::<Result<Vec<(String, Tensor)>>>()?;
    let metadata = HashMap::from([(MANIFEST_KEY.to_string(), serde_json::to_string(&manifest)?)]);
    safetensors::serialize(tensors, Some(metadata)).map_err(|e| ModelError::Checkpoint(e.to_string()))
}

pub fn save(network: &PipNetwork, training: Option<&TrainingInfo>, path: &Path) -> Result<()> {
    let bytes = to_bytes(network, training)?;
    let tmp = path.with_extension("partial");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn parse_manifest(bytes: &[u8]) -> Result<Manifest> {
    let (_, meta) = safetensors::SafeTensors::read_metadata(bytes).map_err(|e| ModelError::Checkpoint(e.to_string()))?;
    let json = meta
        .metadata()
        .as_ref()
        .and_then(|m| m.get(MANIFEST_KEY))
        .ok_or_else(|| ModelError::Checkpoint("no manifest in checkpoint".into()))?;
    let value: serde_json::Value = serde_json::from_str(json)?;
    let version = value.get("format_version").and_then(|v| v.as_u64()).unwrap_or(0);
    if version == 0 || version > u64::from(FORMAT_VERSION) {
        return Err(ModelError::Checkpoint(format!(
            "checkpoint format {version} is not readable by format {FORMAT_VERSION}"
        )));
    }
    Ok(serde_json::from_value(value)?)
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    parse_manifest(&std::fs::read(path)?)
}

/// Rebuilds the network described by the manifest and loads its tensors.
pub fn from_bytes(bytes: &[u8], dtype: DType) -> Result<(PipNetwork, Manifest)> {
    let manifest = parse_manifest(bytes)?;
    let variant = variant_registry().get(&manifest.variant)?;
    if manifest.grid != GridSpec::default() {
        return Err(ModelError::Checkpoint(format!("unsupported grid {:?}", manifest.grid)));
    }
    let network = PipNetwork::new(manifest.model, variant.as_ref(), 0, dtype)?;
    let tensors = candle_core::safetensors::load_buffer(bytes, &Device::Cpu)?;
    if tensors.len() != network.vars().len() {
        return Err(ModelError::Checkpoint(format!(
            "checkpoint holds {} tensors, network has {}",
            tensors.len(),
            network.vars().len()
        )));
    }
    for (name, var) in network.vars() {
        let t = tensors.get(name).ok_or_else(|| ModelError::Checkpoint(format!("missing tensor {name}")))?;
        if t.dims() != var.dims() {
            return Err(ModelError::Checkpoint(format!("{name}: shape {:?}, expected {:?}", t.dims(), var.dims())));
        }
        var.set(&t.to_dtype(dtype)?)?;
    }
    Ok((network, manifest))
}

pub fn load(path: &Path) -> Result<(PipNetwork, Manifest)> {
    from_bytes(&std::fs::read(path)?, DType::F32)
}
