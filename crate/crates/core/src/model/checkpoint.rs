//! Checkpoint container.
//!
//! ```text
//! magic    8 bytes  "DSLCKPT\0"
//! version  u32 LE   1
//! hlen     u64 LE   header length in bytes
//! header   hlen     UTF-8 JSON: config, vocab_hash, n_kinds, n_values, blocks, count
//! data     count × f64 LE, blocks back to back in header order
//! ```

use std::fs;
use std::io::{self, Cursor, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};

use super::params::{Block, ModelParams};
use super::ModelConfig;

pub const MAGIC: &[u8; 8] = b"DSLCKPT\0";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub config: ModelConfig,
    pub vocab_hash: String,
    pub n_kinds: usize,
    pub n_values: usize,
    pub blocks: Vec<Block>,
    pub count: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not a checkpoint file")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("bad header: {0}")]
    Header(String),
    #[error("vocabulary hash {found} does not match {expected}")]
    VocabMismatch { expected: String, found: String },
}

pub fn to_bytes(params: &ModelParams, vocab_hash: &str) -> Vec<u8> {
    let header = Header {
        config: params.config.clone(),
        vocab_hash: vocab_hash.to_string(),
        n_kinds: params.n_kinds,
        n_values: params.n_values,
        blocks: params.layout.blocks.clone(),
        count: params.data.len(),
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(20 + json.len() + 8 * params.data.len());
    out.extend_from_slice(MAGIC);
    out.write_u32::<LittleEndian>(VERSION).expect("vec write");
    out.write_u64::<LittleEndian>(json.len() as u64).expect("vec write");
    out.extend_from_slice(&json);
    for &x in &params.data {
        out.write_f64::<LittleEndian>(x).expect("vec write");
    }
    out
}

pub fn from_bytes(bytes: &[u8]) -> Result<(ModelParams, String), CheckpointError> {
    let mut r = Cursor::new(bytes);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != VERSION {
        return Err(CheckpointError::Version(version));
    }
    let hlen = r.read_u64::<LittleEndian>()? as usize;
    let mut json = vec![0u8; hlen];
    r.read_exact(&mut json)?;
    let header: Header = serde_json::from_slice(&json).map_err(|e| CheckpointError::Header(e.to_string()))?;
    header.config.validate().map_err(CheckpointError::Header)?;
    let mut params = ModelParams::zeros(&header.config, header.n_kinds, header.n_values);
    if params.layout.blocks != header.blocks || params.data.len() != header.count {
        return Err(CheckpointError::Header("block layout does not match the config".into()));
    }
    for x in &mut params.data {
        *x = r.read_f64::<LittleEndian>()?;
    }
    Ok((params, header.vocab_hash))
}

pub fn save(path: &Path, params: &ModelParams, vocab_hash: &str) -> Result<(), CheckpointError> {
    let mut f = fs::File::create(path)?;
    f.write_all(&to_bytes(params, vocab_hash))?;
    Ok(())
}

/// Loads a checkpoint, checking the vocabulary hash when one is given.
pub fn load(path: &Path, expected_vocab: Option<&str>) -> Result<ModelParams, CheckpointError> {
    let (params, hash) = from_bytes(&fs::read(path)?)?;
    if let Some(exp) = expected_vocab {
        if exp != hash {
            return Err(CheckpointError::VocabMismatch {
                expected: exp.to_string(),
                found: hash,
            });
        }
    }
    Ok(params)
}
