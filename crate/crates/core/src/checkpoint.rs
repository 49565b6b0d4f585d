//! Model checkpoints: a JSON header followed by a raw parameter block.
//!
//! Layout: the 8-byte magic `LFCKPT01`, the header length as a little-endian
//! `u64`, the UTF-8 JSON header, then every named block of `f64` values in
//! little-endian order. The header lists the blocks with their lengths, so a
//! checkpoint is readable without out-of-band knowledge.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"LFCKPT01";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockInfo {
    pub name: String,
    pub len: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Header {
    kind: String,
    meta: Value,
    blocks: Vec<BlockInfo>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub kind: String,
    pub meta: Value,
    pub blocks: Vec<(String, Vec<f64>)>,
}

fn load_err(field: &str, message: impl Into<String>) -> Error {
    Error::Load { field: field.to_string(), message: message.into() }
}

impl Checkpoint {
    pub fn new(kind: &str, meta: Value) -> Self {
        Self { kind: kind.to_string(), meta, blocks: Vec::new() }
    }

    pub fn push(&mut self, name: &str, values: Vec<f64>) {
        self.blocks.push((name.to_string(), values));
    }

    pub fn block(&self, name: &str) -> Result<&[f64]> {
        self.blocks
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
            .ok_or_else(|| load_err(name, "block missing from checkpoint"))
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = Header {
            kind: self.kind.clone(),
            meta: self.meta.clone(),
            blocks: self.blocks.iter().map(|(name, v)| BlockInfo { name: name.clone(), len: v.len() }).collect(),
        };
        let json = serde_json::to_vec(&header)?;
        let total: usize = self.blocks.iter().map(|(_, v)| v.len()).sum();
        let mut out = Vec::with_capacity(16 + json.len() + 8 * total);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for (_, v) in &self.blocks {
            for x in v {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 16 || &bytes[..8] != MAGIC {
            return Err(load_err("magic", "not a checkpoint file"));
        }
        let hlen = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        let body = bytes.get(16..16 + hlen).ok_or_else(|| load_err("header", "truncated header"))?;
        let header: Header = serde_json::from_slice(body).map_err(|e| load_err("header", e.to_string()))?;
        let mut rest = &bytes[16 + hlen..];
        let expected: usize = header.blocks.iter().map(|b| b.len).sum();
        if rest.len() != 8 * expected {
            return Err(load_err(
                "blocks",
                format!("parameter block has {} bytes, header declares {}", rest.len(), 8 * expected),
            ));
        }
        let mut blocks = Vec::with_capacity(header.blocks.len());
        for b in header.blocks {
            let (chunk, tail) = rest.split_at(8 * b.len);
            rest = tail;
            let values = chunk.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
            blocks.push((b.name, values));
        }
        Ok(Self { kind: header.kind, meta: header.meta, blocks })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}
