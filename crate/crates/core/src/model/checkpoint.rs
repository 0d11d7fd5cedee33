//! JSON checkpoints with base64 little-endian `f64` weight blobs.

use std::path::Path;
use std::sync::Arc;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::network::{BackboneParams, PairContext, TENSOR_NAMES};
use super::train::LinkPredictor;
use super::{ModelConfig, ModelMode};
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorBlob {
    pub name: String,
    pub shape: Vec<usize>,
    /// Row-major little-endian `f64` values, base64 encoded.
    pub data: String,
}

impl TensorBlob {
    fn encode(name: &str, shape: Vec<usize>, values: &[f64]) -> Self {
        let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
        TensorBlob {
            name: name.to_string(),
            shape,
            data: STANDARD.encode(bytes),
        }
    }

    fn decode(&self) -> Result<Vec<f64>> {
        let bytes = STANDARD
            .decode(&self.data)
            .map_err(|e| Error::Config(format!("tensor {}: {e}", self.name)))?;
        let expected: usize = self.shape.iter().product();
        if bytes.len() != 8 * expected {
            return Err(Error::Dimension(format!(
                "tensor {} has {} bytes for shape {:?}",
                self.name,
                bytes.len(),
                self.shape
            )));
        }
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub mode: ModelMode,
    pub seed: u64,
    pub config_digest: String,
    pub config: ModelConfig,
    pub tensors: Vec<TensorBlob>,
    /// Frozen completion scorer of an `ncnc` model.
    pub completion: Option<Box<Checkpoint>>,
}

impl Checkpoint {
    pub fn from_predictor(p: &LinkPredictor, config_digest: &str) -> Self {
        let params = &p.params;
        let shapes = [
            vec![params.w1.nrows(), params.w1.ncols()],
            vec![params.w2.nrows(), params.w2.ncols()],
            vec![params.wh.nrows(), params.wh.ncols()],
            vec![params.bh.len()],
            vec![params.wo.len()],
            vec![1],
        ];
        let tensors = TENSOR_NAMES
            .iter()
            .zip(shapes)
            .zip(params.tensors())
            .map(|((name, shape), values)| TensorBlob::encode(name, shape, values))
            .collect();
        Checkpoint {
            version: CHECKPOINT_VERSION,
            mode: p.mode,
            seed: p.seed,
            config_digest: config_digest.to_string(),
            config: p.config.clone(),
            tensors,
            completion: p.completion().map(|c| Box::new(Checkpoint::from_predictor(c, config_digest))),
        }
    }

    pub fn params(&self) -> Result<BackboneParams> {
        if self.tensors.len() != TENSOR_NAMES.len()
            || self.tensors.iter().zip(TENSOR_NAMES).any(|(t, n)| t.name != n)
        {
            return Err(Error::Config(format!("checkpoint tensors must be {TENSOR_NAMES:?}")));
        }
        let matrix = |t: &TensorBlob| -> Result<Array2<f64>> {
            if t.shape.len() != 2 {
                return Err(Error::Dimension(format!("tensor {} is not a matrix", t.name)));
            }
            Array2::from_shape_vec((t.shape[0], t.shape[1]), t.decode()?)
                .map_err(|e| Error::Dimension(e.to_string()))
        };
        let vector = |t: &TensorBlob| -> Result<Array1<f64>> { Ok(Array1::from(t.decode()?)) };
        let t = &self.tensors;
        let params = BackboneParams {
            w1: matrix(&t[0])?,
            w2: matrix(&t[1])?,
            wh: matrix(&t[2])?,
            bh: vector(&t[3])?,
            wo: vector(&t[4])?,
            bo: *t[5]
                .decode()?
                .first()
                .ok_or_else(|| Error::Dimension("empty output bias".into()))?,
        };
        if !params.is_finite() {
            return Err(Error::Numeric("checkpoint holds non-finite weights".into()));
        }
        Ok(params)
    }

    /// Rebinds the stored weights to a context built from the same split and labels.
    pub fn into_predictor(&self, ctx: Arc<PairContext>) -> Result<LinkPredictor> {
        let completion = self
            .completion
            .as_ref()
            .map(|c| c.into_predictor(Arc::clone(&ctx)))
            .transpose()?;
        LinkPredictor::new(self.mode, self.params()?, self.config.clone(), self.seed, ctx, completion)
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        crate::io::write_json(path, self)
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let c: Checkpoint = crate::io::read_json(path)?;
        if c.version != CHECKPOINT_VERSION {
            return Err(Error::Config(format!(
                "checkpoint version {} (expected {CHECKPOINT_VERSION})",
                c.version
            )));
        }
        Ok(c)
    }
}
