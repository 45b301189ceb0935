//! Checkpoint: magic `B2C1`, u64 header length, JSON header (config, seed,
//! tensor names and shapes), then every tensor as little-endian f64 in
//! header order.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::finetune::Task;
use super::params::Params;
use super::tape::Tensor;
use crate::error::{Error, Result};
use crate::util::{read_bytes, volume, write_atomic, BinReader, BinWriter};

const MAGIC: &[u8; 4] = b"B2C1";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: ModelConfig,
    pub seed: u64,
    /// Set once a classifier head replaced the point heads.
    pub task: Option<Task>,
    pub params: Params,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    version: u32,
    config: ModelConfig,
    seed: u64,
    #[serde(default)]
    task: Option<Task>,
    tensors: Vec<TensorEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorEntry {
    name: String,
    shape: [usize; 2],
}

pub fn encode_checkpoint(ck: &Checkpoint) -> Vec<u8> {
    let header = Header {
        version: VERSION,
        config: ck.config.clone(),
        seed: ck.seed,
        task: ck.task,
        tensors: ck
            .params
            .iter()
            .map(|(name, t)| TensorEntry {
                name: name.to_string(),
                shape: [t.rows, t.cols],
            })
            .collect(),
    };
    let json = serde_json::to_vec(&header).expect("header serialize");
    let mut w = BinWriter::default();
    w.bytes(MAGIC);
    w.u64(json.len() as u64);
    w.bytes(&json);
    for (_, t) in ck.params.iter() {
        w.f64s(&t.data);
    }
    w.buf
}

pub fn decode_checkpoint(data: &[u8]) -> Result<Checkpoint> {
    let mut r = BinReader::new(data);
    r.magic(MAGIC)?;
    let len = usize::try_from(r.u64("header_len")?).map_err(|_| Error::parse("header_len", "too large"))?;
    let json = r.bytes(len, "header")?;
    let text = std::str::from_utf8(&json).map_err(|e| Error::parse("header", e.to_string()))?;
    let header: Header = crate::util::parse_json(text).map_err(|e| match e {
        Error::Parse { path, message } => Error::parse(format!("header.{path}"), message),
        other => other,
    })?;
    if header.version != VERSION {
        return Err(Error::parse("header.version", format!("unsupported version {}", header.version)));
    }
    header.config.validate()?;
    let mut params = Params::default();
    for t in &header.tensors {
        let n = volume(&t.shape, &t.name)?;
        let data = r.f64s(n, &t.name)?;
        if params.get(&t.name).is_some() {
            return Err(Error::parse("header.tensors", format!("duplicate tensor {}", t.name)));
        }
        params.insert(t.name.clone(), Tensor::from_vec(t.shape[0], t.shape[1], data));
    }
    r.finish()?;
    Ok(Checkpoint {
        config: header.config,
        seed: header.seed,
        task: header.task,
        params,
    })
}

pub fn write_checkpoint(ck: &Checkpoint, path: &Path) -> Result<()> {
    write_atomic(path, &encode_checkpoint(ck))
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    decode_checkpoint(&read_bytes(path)?)
}
