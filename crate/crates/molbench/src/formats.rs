//! On-disk formats: reference stats JSON, model checkpoints, objective
//! definitions and run configurations.

use std::path::Path;

use molbench_core::optimize::{OptimizerKind, RunConfig};
use molbench_core::oracle::{CompositeObjective, ObjectiveSpec};
use molbench_core::policy::{GruLM, Hyper, Matrix, PretrainConfig, Vocabulary};
use molbench_core::refstats::ReferenceStats;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{HarnessError, Result};
use crate::io::{read_bytes, read_json, write_file, write_json};

pub const STATS_VERSION: u32 = 1;
pub const CHECKPOINT_VERSION: u32 = 1;
const CHECKPOINT_MAGIC: &[u8; 4] = b"MBCK";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsFile {
    pub version: u32,
    #[serde(flatten)]
    pub stats: ReferenceStats,
}

pub fn write_stats(path: &Path, stats: &ReferenceStats) -> Result<()> {
    write_json(path, &StatsFile { version: STATS_VERSION, stats: stats.clone() })
}

pub fn read_stats(path: &Path) -> Result<ReferenceStats> {
    let f: StatsFile = read_json(path)?;
    if f.version != STATS_VERSION {
        return Err(HarnessError::format(path, format!("unsupported stats version {}", f.version)));
    }
    Ok(f.stats)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BlockInfo {
    name: String,
    rows: usize,
    cols: usize,
}

/// Where a checkpoint came from; absent for hand-built models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub corpus_digest: String,
    pub pretrain: PretrainConfig,
    pub init_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointHeader {
    version: u32,
    hyper: Hyper,
    vocab: Vocabulary,
    blocks: Vec<BlockInfo>,
    digest: String,
    provenance: Option<Provenance>,
}

/// `MBCK`, u32 version, u64 header length, JSON header, then every
/// parameter block as little-endian f64 in header order.
pub fn encode_checkpoint(model: &GruLM, provenance: Option<Provenance>) -> Vec<u8> {
    let blocks = model
        .param_names()
        .into_iter()
        .zip(model.params())
        .map(|(name, m)| BlockInfo { name, rows: m.rows(), cols: m.cols() })
        .collect();
    let header = CheckpointHeader {
        version: CHECKPOINT_VERSION,
        hyper: model.hyper(),
        vocab: model.vocab().clone(),
        blocks,
        digest: model.digest(),
        provenance,
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(16 + json.len() + 8 * model.params().iter().map(|m| m.data().len()).sum::<usize>());
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for m in model.params() {
        for x in m.data() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

pub fn decode_checkpoint(bytes: &[u8]) -> std::result::Result<(GruLM, Option<Provenance>), String> {
    let take = |at: usize, n: usize| bytes.get(at..at + n).ok_or_else(|| "truncated checkpoint".to_string());
    if take(0, 4)? != CHECKPOINT_MAGIC {
        return Err("not a checkpoint (bad magic)".into());
    }
    let version = u32::from_le_bytes(take(4, 4)?.try_into().unwrap());
    if version != CHECKPOINT_VERSION {
        return Err(format!("unsupported checkpoint version {version}"));
    }
    let len = u64::from_le_bytes(take(8, 8)?.try_into().unwrap()) as usize;
    let header: CheckpointHeader = serde_json::from_slice(take(16, len)?).map_err(|e| format!("header: {e}"))?;
    if header.version != version {
        return Err("header version disagrees with the preamble".into());
    }
    let mut at = 16 + len;
    let mut params = Vec::with_capacity(header.blocks.len());
    for b in &header.blocks {
        let n = b.rows.checked_mul(b.cols).ok_or("block size overflows")?;
        let raw = take(at, n.checked_mul(8).ok_or("block size overflows")?)?;
        at += 8 * n;
        let data = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        params.push(Matrix::from_vec(b.rows, b.cols, data));
    }
    if at != bytes.len() {
        return Err("trailing bytes after the last block".into());
    }
    let model = GruLM::from_parts(header.vocab, header.hyper, params).map_err(|e| e.to_string())?;
    let names: Vec<&str> = header.blocks.iter().map(|b| b.name.as_str()).collect();
    if model.param_names() != names {
        return Err("block names do not match the architecture".into());
    }
    if model.digest() != header.digest {
        return Err("parameter digest mismatch".into());
    }
    Ok((model, header.provenance))
}

pub fn write_checkpoint(path: &Path, model: &GruLM, provenance: Option<Provenance>) -> Result<()> {
    write_file(path, &encode_checkpoint(model, provenance))
}

pub fn read_checkpoint(path: &Path) -> Result<(GruLM, Option<Provenance>)> {
    decode_checkpoint(&read_bytes(path)?).map_err(|e| HarnessError::format(path, e))
}

pub fn read_objective(path: &Path) -> Result<(ObjectiveSpec, CompositeObjective)> {
    let spec: ObjectiveSpec = read_json(path)?;
    let built = spec.build().map_err(|e| HarnessError::format(path, e))?;
    Ok((spec, built))
}

/// A run configuration from JSON. Only `optimizer` is required; other keys
/// override that optimizer's preset, and unknown keys are rejected.
pub fn run_config_from_json(value: &Value) -> std::result::Result<RunConfig, String> {
    let obj = value.as_object().ok_or("run configuration must be a JSON object")?;
    let kind_val = obj.get("optimizer").ok_or("run configuration needs an \"optimizer\"")?;
    let kind: OptimizerKind = serde_json::from_value(kind_val.clone()).map_err(|e| format!("optimizer: {e}"))?;
    let mut merged = serde_json::to_value(RunConfig::preset(kind)).expect("preset serializes");
    let target = merged.as_object_mut().expect("preset is an object");
    for (k, v) in obj {
        target.insert(k.clone(), v.clone());
    }
    let cfg: RunConfig = serde_json::from_value(merged).map_err(|e| e.to_string())?;
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn model() -> GruLM {
        let v = Vocabulary::from_corpus(["CCO", "c1ccccc1"]).unwrap();
        GruLM::new(v, Hyper { embed: 3, hidden: 4, layers: 2 }, 5).unwrap()
    }

    #[test]
    fn checkpoint_round_trip() {
        let m = model();
        let prov = Provenance { corpus_digest: "ab".into(), pretrain: PretrainConfig::default(), init_seed: 5 };
        let bytes = encode_checkpoint(&m, Some(prov.clone()));
        assert_eq!(&bytes[..4], b"MBCK");
        let (back, p) = decode_checkpoint(&bytes).unwrap();
        assert_eq!(back, m);
        assert_eq!(p, Some(prov));
    }

    #[test]
    fn corrupted_checkpoints_are_rejected() {
        let bytes = encode_checkpoint(&model(), None);
        assert!(decode_checkpoint(&bytes[..bytes.len() - 1]).is_err());
        let mut flipped = bytes.clone();
        let last = flipped.len() - 3;
        flipped[last] ^= 0x40;
        assert_eq!(decode_checkpoint(&flipped).unwrap_err(), "parameter digest mismatch");
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(decode_checkpoint(&extra).is_err());
        let mut magic = bytes;
        magic[0] = b'X';
        assert!(decode_checkpoint(&magic).is_err());
    }

    #[test]
    fn run_config_overlays_presets() {
        let c = run_config_from_json(&json!({"optimizer": "REINVENT", "budget": 500})).unwrap();
        assert_eq!((c.sigma, c.k_fraction, c.budget, c.name.as_str()), (500.0, 1.0, 500, "REINVENT"));
        let c = run_config_from_json(&json!({"optimizer": "AHC", "name": "AHC*", "sigma": 60.0})).unwrap();
        assert_eq!((c.sigma, c.k_fraction), (60.0, 0.25));
        assert!(run_config_from_json(&json!({"optimizer": "AHC", "temperature": 2})).is_err());
        assert!(run_config_from_json(&json!({"optimizer": "GA"})).is_err());
        assert!(run_config_from_json(&json!({"sigma": 1})).is_err());
        assert!(run_config_from_json(&json!({"optimizer": "AHC", "k_fraction": 1.5})).is_err());
    }
}
