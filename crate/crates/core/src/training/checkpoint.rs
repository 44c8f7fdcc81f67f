//! Binary checkpoint container.
//!
//! Layout: 8-byte magic, little-endian `u32` version, `u64` header length,
//! a JSON header describing configs and tensor shapes, the tensors as
//! little-endian `f64` in header order, and a trailing CRC-32 of everything
//! before it.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{AdamState, TrainConfig, TrainHistory};
use crate::networks::{
    DiscriminatorConfig, DiscriminatorModel, GeneratorConfig, GeneratorModel, NetworkError, ParamSet,
};
use crate::tensor::Tensor;

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"BZGANCKP";

/// Everything needed to resume training or serve the generator.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub generator: GeneratorModel,
    pub discriminator: DiscriminatorModel,
    pub config: TrainConfig,
    /// Completed iterations.
    pub step: u64,
    pub adam_g: AdamState,
    pub adam_d: AdamState,
    pub history: TrainHistory,
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint i/o: {0}")]
    Io(#[from] io::Error),
    #[error("checkpoint version {found} is not supported (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
    #[error("checkpoint is missing tensor {0}")]
    MissingTensor(String),
    #[error("checkpoint models are inconsistent: {0}")]
    Network(#[from] NetworkError),
}

#[derive(Serialize, Deserialize)]
struct Header {
    generator: GeneratorConfig,
    discriminator: DiscriminatorConfig,
    train: TrainConfig,
    step: u64,
    adam_g_t: u64,
    adam_d_t: u64,
    history: TrainHistory,
    tensors: Vec<TensorEntry>,
}

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    group: String,
    name: String,
    shape: Vec<usize>,
}

const GROUPS: [&str; 6] = ["gen", "disc", "adam_g.m", "adam_g.v", "adam_d.m", "adam_d.v"];

fn groups(ckpt: &Checkpoint) -> [Vec<(&String, &Tensor)>; 6] {
    [
        ckpt.generator.params().iter().collect(),
        ckpt.discriminator.params().iter().collect(),
        ckpt.adam_g.m.iter().collect(),
        ckpt.adam_g.v.iter().collect(),
        ckpt.adam_d.m.iter().collect(),
        ckpt.adam_d.v.iter().collect(),
    ]
}

/// Serializes a checkpoint to bytes.
pub fn encode_checkpoint(ckpt: &Checkpoint) -> Vec<u8> {
    let groups = groups(ckpt);
    let mut tensors = Vec::new();
    for (group, entries) in GROUPS.iter().zip(&groups) {
        for (name, t) in entries {
            tensors.push(TensorEntry {
                group: group.to_string(),
                name: name.to_string(),
                shape: t.shape().to_vec(),
            });
        }
    }
    let header = Header {
        generator: ckpt.generator.config().clone(),
        discriminator: ckpt.discriminator.config().clone(),
        train: ckpt.config.clone(),
        step: ckpt.step,
        adam_g_t: ckpt.adam_g.t,
        adam_d_t: ckpt.adam_d.t,
        history: ckpt.history.clone(),
        tensors,
    };
    let header = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    for entries in &groups {
        for (_, t) in entries {
            for v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

/// Parses bytes written by [`encode_checkpoint`].
pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint, CheckpointError> {
    let corrupt = |m: &str| CheckpointError::Corrupt(m.to_string());
    if bytes.len() < MAGIC.len() + 4 + 8 + 4 {
        return Err(corrupt("file is too short"));
    }
    if &bytes[..8] != MAGIC {
        return Err(corrupt("not a checkpoint file"));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != CHECKPOINT_VERSION {
        return Err(CheckpointError::Version {
            found: version,
            expected: CHECKPOINT_VERSION,
        });
    }
    let (body, crc) = bytes.split_at(bytes.len() - 4);
    if crc32fast::hash(body) != u32::from_le_bytes(crc.try_into().expect("4 bytes")) {
        return Err(corrupt("checksum mismatch (truncated or damaged file)"));
    }
    let header_len = u64::from_le_bytes(body[12..20].try_into().expect("8 bytes")) as usize;
    let header_end = 20usize
        .checked_add(header_len)
        .filter(|e| *e <= body.len())
        .ok_or_else(|| corrupt("header overruns file"))?;
    let header: Header = serde_json::from_slice(&body[20..header_end])
        .map_err(|e| CheckpointError::Corrupt(format!("bad header: {e}")))?;

    let mut payload = &body[header_end..];
    let mut tables: BTreeMap<&str, ParamSet> = GROUPS.iter().map(|g| (*g, ParamSet::new())).collect();
    for entry in &header.tensors {
        let numel: usize = entry.shape.iter().product();
        let need = numel * 8;
        if payload.len() < need {
            return Err(corrupt("tensor data is shorter than the header declares"));
        }
        let (chunk, rest) = payload.split_at(need);
        payload = rest;
        let data = chunk
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let t = Tensor::new(entry.shape.clone(), data).map_err(|e| CheckpointError::Corrupt(e.to_string()))?;
        tables
            .get_mut(entry.group.as_str())
            .ok_or_else(|| CheckpointError::Corrupt(format!("unknown tensor group {}", entry.group)))?
            .insert(entry.name.clone(), t);
    }
    if !payload.is_empty() {
        return Err(corrupt("trailing bytes after tensor data"));
    }

    let mut take = |g: &str| tables.remove(g).expect("known group");
    let generator = GeneratorModel::from_parts(header.generator, take("gen")).map_err(missing)?;
    let discriminator = DiscriminatorModel::from_parts(header.discriminator, take("disc")).map_err(missing)?;
    let to_map = |p: ParamSet| p.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
    let adam_g = AdamState {
        t: header.adam_g_t,
        m: to_map(take("adam_g.m")),
        v: to_map(take("adam_g.v")),
    };
    let adam_d = AdamState {
        t: header.adam_d_t,
        m: to_map(take("adam_d.m")),
        v: to_map(take("adam_d.v")),
    };
    Ok(Checkpoint {
        generator,
        discriminator,
        config: header.train,
        step: header.step,
        adam_g,
        adam_d,
        history: header.history,
    })
}

fn missing(e: NetworkError) -> CheckpointError {
    match e {
        NetworkError::MissingParameter(name) => CheckpointError::MissingTensor(name),
        other => CheckpointError::Network(other),
    }
}

/// Writes the checkpoint atomically (temporary file, then rename).
pub fn save_checkpoint(ckpt: &Checkpoint, path: &Path) -> Result<(), CheckpointError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("ckpt.tmp");
    fs::write(&tmp, encode_checkpoint(ckpt))?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, CheckpointError> {
    decode_checkpoint(&fs::read(path)?)
}
