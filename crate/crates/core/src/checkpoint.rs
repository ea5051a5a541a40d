//! Self-describing model checkpoints.
//!
//! A checkpoint is one JSON document: a format tag, the model variant, the
//! data schema (Z and feature width), the attention config, and every tensor
//! with named shapes. JSON floats round-trip bit-exactly, so save/load is an
//! identity on parameters.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::model::{AttentionConfig, ModelParams};
use crate::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "atrpp-checkpoint-v1";

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    /// "ATRPP" (twin channels) or "AERPP" (event-only).
    pub variant: String,
    pub num_dims: usize,
    pub feature_width: usize,
    pub attention: AttentionConfig,
    pub trained_epochs: usize,
    pub params: ModelParams,
}

impl Checkpoint {
    pub fn new(params: ModelParams, attention: AttentionConfig, trained_epochs: usize) -> Self {
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            variant: params.variant().to_string(),
            num_dims: params.sizes.num_dims,
            feature_width: params.sizes.feature_width,
            attention,
            trained_epochs,
            params,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(file, self)
            .map_err(|e| Error::Data(format!("serialize checkpoint: {e}")))
    }

    pub fn load(path: &Path) -> Result<Checkpoint> {
        let file = BufReader::new(File::open(path)?);
        let ckpt: Checkpoint = serde_json::from_reader(file)
            .map_err(|e| Error::Parse { line: 0, msg: format!("checkpoint: {e}") })?;
        if ckpt.format != CHECKPOINT_FORMAT {
            return Err(Error::Data(format!(
                "unsupported checkpoint format {:?}, expected {CHECKPOINT_FORMAT:?}",
                ckpt.format
            )));
        }
        ckpt.params.validate()?;
        if ckpt.num_dims != ckpt.params.sizes.num_dims
            || ckpt.feature_width != ckpt.params.sizes.feature_width
        {
            return Err(Error::Data("checkpoint schema disagrees with tensors".into()));
        }
        Ok(ckpt)
    }
}
