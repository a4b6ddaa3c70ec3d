//! Model checkpoints: a JSON shape manifest next to a flat little-endian
//! `f64` weight file.
//!
//! `<stem>.json` lists every layer with its kind, widths, GIN ε and the shape
//! and byte offset of each parameter. `<stem>.bin` holds the parameters back
//! to back in layer order, each row-major.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

use super::model::{Layer, LayerKind, Model};

pub const CHECKPOINT_FORMAT: &str = "f64-le-rowmajor-v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamEntry {
    pub rows: usize,
    pub cols: usize,
    /// Offset into the weight file, in bytes.
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerEntry {
    pub kind: LayerKind,
    pub c_in: usize,
    pub c_out: usize,
    pub gin_eps: f64,
    pub params: Vec<ParamEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub format: String,
    pub normalize_adjacency: bool,
    pub layers: Vec<LayerEntry>,
    pub total_bytes: usize,
}

fn paths(stem: &Path) -> (PathBuf, PathBuf) {
    (stem.with_extension("json"), stem.with_extension("bin"))
}

pub fn save_checkpoint(model: &Model, stem: &Path) -> Result<()> {
    let (manifest_path, bin_path) = paths(stem);
    let mut bytes = Vec::with_capacity(model.num_params() * 8);
    let mut layers = Vec::new();
    for layer in &model.layers {
        let mut params = Vec::new();
        for p in &layer.params {
            params.push(ParamEntry {
                rows: p.rows(),
                cols: p.cols(),
                offset: bytes.len(),
            });
            for v in p.data() {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        layers.push(LayerEntry {
            kind: layer.kind,
            c_in: layer.c_in,
            c_out: layer.c_out,
            gin_eps: layer.gin_eps,
            params,
        });
    }
    let manifest = CheckpointManifest {
        format: CHECKPOINT_FORMAT.into(),
        normalize_adjacency: model.normalize_adjacency,
        layers,
        total_bytes: bytes.len(),
    };
    fs::write(&bin_path, &bytes)?;
    fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

pub fn load_checkpoint(stem: &Path) -> Result<Model> {
    let (manifest_path, bin_path) = paths(stem);
    let manifest: CheckpointManifest = serde_json::from_str(&fs::read_to_string(&manifest_path)?)?;
    if manifest.format != CHECKPOINT_FORMAT {
        return Err(Error::Shape(format!("unknown checkpoint format {}", manifest.format)));
    }
    let bytes = fs::read(&bin_path)?;
    if bytes.len() != manifest.total_bytes {
        return Err(Error::Shape(format!(
            "weight file has {} bytes, manifest says {}",
            bytes.len(),
            manifest.total_bytes
        )));
    }
    let mut layers = Vec::new();
    for entry in manifest.layers {
        let mut params = Vec::new();
        for p in entry.params {
            let end = p.offset + p.rows * p.cols * 8;
            let slice = bytes
                .get(p.offset..end)
                .ok_or_else(|| Error::Shape("parameter outside weight file".into()))?;
            let data = slice
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            params.push(Matrix::from_vec(p.rows, p.cols, data)?);
        }
        layers.push(Layer {
            kind: entry.kind,
            c_in: entry.c_in,
            c_out: entry.c_out,
            gin_eps: entry.gin_eps,
            params,
        });
    }
    let model = Model {
        layers,
        normalize_adjacency: manifest.normalize_adjacency,
    };
    model.validate()?;
    Ok(model)
}
