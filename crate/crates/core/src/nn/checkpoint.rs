//! Checkpoint files.
//!
//! A checkpoint is a JSON object
//!
//! ```json
//! {"format": "invsig-mlp", "version": 1, "sha256": "<hex>", "payload": {...}}
//! ```
//!
//! where `sha256` is the digest of the exact payload text as stored in the
//! file. The payload holds `config` (a [`ModelConfig`]), `hidden` (per hidden
//! layer: `weight`, `bias`, `gamma`, `beta`, `running_mean`, `running_var`),
//! `head` (`weight`, `bias`), `hyper` and `optimizer` (Adam step and moments in
//! the trainable tensor order) and `metadata`. Every tensor is
//! `{"shape": [..], "data": [..]}` with row-major data. Floats are written in
//! shortest round-trip form so a load reproduces every bit.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use sha2::{Digest, Sha256};

use super::adam::{AdamHyper, AdamState};
use super::config::ModelConfig;
use super::layers::{BatchNorm, Linear};
use super::mlp::{HiddenLayer, Mlp, MlpParameters};
use crate::datasets::write_atomic;
use crate::error::{Error, Result};
use crate::signature::Group;

pub const CHECKPOINT_FORMAT: &str = "invsig-mlp";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Where a checkpoint came from.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub seed: u64,
    pub epoch: usize,
    pub group: Option<Group>,
    pub half_width: usize,
    /// Most recent per-epoch validation losses, oldest first.
    pub loss_history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpCheckpoint {
    pub version: u32,
    pub model: Mlp,
    pub hyper: AdamHyper,
    pub optimizer: AdamState,
    pub metadata: TrainingMetadata,
}

impl MlpCheckpoint {
    pub fn new(model: Mlp, hyper: AdamHyper, optimizer: AdamState, metadata: TrainingMetadata) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            model,
            hyper,
            optimizer,
            metadata,
        }
    }

    /// A freshly initialized checkpoint with an empty optimizer state.
    pub fn fresh(model: Mlp, metadata: TrainingMetadata) -> Self {
        let optimizer = AdamState::new(model.params());
        Self::new(model, AdamHyper::default(), optimizer, metadata)
    }
}

#[derive(Serialize, Deserialize)]
struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    fn vector(a: &Array1<f64>) -> Self {
        Self {
            shape: vec![a.len()],
            data: a.to_vec(),
        }
    }

    fn matrix(a: &Array2<f64>) -> Self {
        Self {
            shape: vec![a.nrows(), a.ncols()],
            data: a.iter().copied().collect(),
        }
    }

    fn into_vector(self, what: &str) -> Result<Array1<f64>> {
        match self.shape[..] {
            [n] if n == self.data.len() => Ok(Array1::from_vec(self.data)),
            _ => Err(Error::Checkpoint(format!("{what}: expected a vector, shape {:?}", self.shape))),
        }
    }

    fn into_matrix(self, what: &str) -> Result<Array2<f64>> {
        match self.shape[..] {
            [r, c] => Array2::from_shape_vec((r, c), self.data)
                .map_err(|e| Error::Checkpoint(format!("{what}: {e}"))),
            _ => Err(Error::Checkpoint(format!("{what}: expected a matrix, shape {:?}", self.shape))),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RawHidden {
    weight: Tensor,
    bias: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running_mean: Tensor,
    running_var: Tensor,
}

#[derive(Serialize, Deserialize)]
struct RawHead {
    weight: Tensor,
    bias: Tensor,
}

#[derive(Serialize, Deserialize)]
struct Payload {
    config: ModelConfig,
    hidden: Vec<RawHidden>,
    head: RawHead,
    hyper: AdamHyper,
    optimizer: AdamState,
    metadata: TrainingMetadata,
}

#[derive(Serialize, Deserialize)]
struct Envelope<'a> {
    format: String,
    version: u32,
    sha256: String,
    #[serde(borrow)]
    payload: &'a RawValue,
}

fn digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn to_payload(ckpt: &MlpCheckpoint) -> Payload {
    let params = ckpt.model.params();
    Payload {
        config: *ckpt.model.config(),
        hidden: params
            .hidden
            .iter()
            .map(|l| RawHidden {
                weight: Tensor::matrix(&l.linear.weight),
                bias: Tensor::vector(&l.linear.bias),
                gamma: Tensor::vector(&l.norm.gamma),
                beta: Tensor::vector(&l.norm.beta),
                running_mean: Tensor::vector(&l.norm.running_mean),
                running_var: Tensor::vector(&l.norm.running_var),
            })
            .collect(),
        head: RawHead {
            weight: Tensor::matrix(&params.head.weight),
            bias: Tensor::vector(&params.head.bias),
        },
        hyper: ckpt.hyper,
        optimizer: ckpt.optimizer.clone(),
        metadata: ckpt.metadata.clone(),
    }
}

fn from_payload(p: Payload) -> Result<MlpCheckpoint> {
    let hidden = p
        .hidden
        .into_iter()
        .enumerate()
        .map(|(i, l)| {
            let what = |name: &str| format!("hidden layer {i} {name}");
            Ok(HiddenLayer {
                linear: Linear {
                    weight: l.weight.into_matrix(&what("weight"))?,
                    bias: l.bias.into_vector(&what("bias"))?,
                },
                norm: BatchNorm {
                    gamma: l.gamma.into_vector(&what("gamma"))?,
                    beta: l.beta.into_vector(&what("beta"))?,
                    running_mean: l.running_mean.into_vector(&what("running_mean"))?,
                    running_var: l.running_var.into_vector(&what("running_var"))?,
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let head = Linear {
        weight: p.head.weight.into_matrix("head weight")?,
        bias: p.head.bias.into_vector("head bias")?,
    };
    let model = Mlp::from_parts(p.config, MlpParameters { hidden, head })
        .map_err(|e| Error::Checkpoint(e.to_string()))?;
    let fresh = AdamState::new(model.params());
    let shapes_match = |a: &[Vec<f64>]| a.len() == fresh.m.len() && a.iter().zip(&fresh.m).all(|(x, y)| x.len() == y.len());
    if !shapes_match(&p.optimizer.m) || !shapes_match(&p.optimizer.v) {
        return Err(Error::Checkpoint("optimizer moments do not match parameters".into()));
    }
    Ok(MlpCheckpoint::new(model, p.hyper, p.optimizer, p.metadata))
}

pub fn checkpoint_to_string(ckpt: &MlpCheckpoint) -> Result<String> {
    let payload = to_payload(ckpt);
    let text = serde_json::to_string(&payload).map_err(|e| Error::Checkpoint(e.to_string()))?;
    // JSON has no representation for NaN or infinity; serde would write null.
    if text.contains("null") && has_non_finite(ckpt) {
        return Err(Error::Numeric("checkpoint contains non-finite values".into()));
    }
    let raw = RawValue::from_string(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
    let envelope = Envelope {
        format: CHECKPOINT_FORMAT.into(),
        version: CHECKPOINT_VERSION,
        sha256: digest(raw.get()),
        payload: &raw,
    };
    serde_json::to_string(&envelope).map_err(|e| Error::Checkpoint(e.to_string()))
}

fn has_non_finite(ckpt: &MlpCheckpoint) -> bool {
    let params = ckpt.model.params();
    let running = params
        .hidden
        .iter()
        .flat_map(|l| l.norm.running_mean.iter().chain(&l.norm.running_var));
    let moments = ckpt.optimizer.m.iter().chain(&ckpt.optimizer.v).flatten();
    let history = ckpt.metadata.loss_history.iter();
    params
        .trainable()
        .into_iter()
        .flatten()
        .chain(running)
        .chain(moments)
        .chain(history)
        .any(|v| !v.is_finite())
}

pub fn checkpoint_from_str(text: &str) -> Result<MlpCheckpoint> {
    let envelope: Envelope =
        serde_json::from_str(text).map_err(|e| Error::Checkpoint(format!("malformed checkpoint: {e}")))?;
    if envelope.format != CHECKPOINT_FORMAT {
        return Err(Error::Checkpoint(format!("unknown format {:?}", envelope.format)));
    }
    if envelope.version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!(
            "checkpoint version {} is not supported (expected {CHECKPOINT_VERSION})",
            envelope.version
        )));
    }
    let actual = digest(envelope.payload.get());
    if actual != envelope.sha256 {
        return Err(Error::Checkpoint(format!(
            "checksum mismatch: file says {}, payload hashes to {actual}",
            envelope.sha256
        )));
    }
    let payload: Payload = serde_json::from_str(envelope.payload.get())
        .map_err(|e| Error::Checkpoint(format!("malformed payload: {e}")))?;
    from_payload(payload)
}

pub fn save_checkpoint(ckpt: &MlpCheckpoint, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), checkpoint_to_string(ckpt)?.as_bytes())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<MlpCheckpoint> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    checkpoint_from_str(&text).map_err(|e| match e {
        Error::Checkpoint(msg) => Error::Checkpoint(format!("{}: {msg}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{adam_step, Gradients, Mode};
    use crate::rng::seeded;
    use ndarray::Array2;
    use rand::Rng;

    fn trained_checkpoint() -> MlpCheckpoint {
        let mut rng = seeded(5, &[]);
        let mut model = Mlp::new(ModelConfig::for_half_width(2), &mut rng).unwrap();
        let x = Array2::from_shape_simple_fn((8, 10), || rng.random_range(-1.0..1.0));
        let (_, cache) = model.forward_train(x.view()).unwrap();
        let g = Array2::from_shape_simple_fn((8, 2), || rng.random_range(-1.0..1.0));
        let grads = model.backward(&cache, g.view()).unwrap();
        let mut ckpt = MlpCheckpoint::fresh(model, TrainingMetadata {
            seed: 5,
            epoch: 3,
            group: Some(Group::Affine),
            half_width: 2,
            loss_history: vec![1.5, 0.1 + 0.2, -0.0],
        });
        adam_step(ckpt.model.params_mut(), &grads, &mut ckpt.optimizer, &ckpt.hyper).unwrap();
        ckpt
    }

    fn bits(ckpt: &MlpCheckpoint) -> Vec<u64> {
        let p = ckpt.model.params();
        p.trainable()
            .into_iter()
            .flatten()
            .chain(p.hidden.iter().flat_map(|l| l.norm.running_mean.iter().chain(&l.norm.running_var)))
            .chain(ckpt.optimizer.m.iter().chain(&ckpt.optimizer.v).flatten())
            .chain(&ckpt.metadata.loss_history)
            .map(|v| v.to_bits())
            .collect()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let ckpt = trained_checkpoint();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_checkpoint(&ckpt, &path).unwrap();
        let back = load_checkpoint(&path).unwrap();
        assert_eq!(back, ckpt);
        assert_eq!(bits(&back), bits(&ckpt));
        let x = Array2::from_shape_fn((3, 10), |(i, j)| (i * 10 + j) as f64 * 0.01);
        let a = ckpt.model.forward(x.view(), Mode::Eval).unwrap().outputs;
        let b = back.model.forward(x.view(), Mode::Eval).unwrap().outputs;
        assert_eq!(a, b);
    }

    #[test]
    fn tampered_payload_fails_checksum() {
        let text = checkpoint_to_string(&trained_checkpoint()).unwrap();
        let pos = text.find("\"epoch\":3").unwrap();
        let tampered = format!("{}\"epoch\":4{}", &text[..pos], &text[pos + 9..]);
        let err = checkpoint_from_str(&tampered).unwrap_err();
        assert!(err.to_string().contains("checksum"), "{err}");
        assert!(checkpoint_from_str(&text[..text.len() / 2]).is_err());
    }

    #[test]
    fn version_mismatch_is_reported() {
        let text = checkpoint_to_string(&trained_checkpoint()).unwrap();
        let bumped = text.replacen("\"version\":1", "\"version\":2", 1);
        let err = checkpoint_from_str(&bumped).unwrap_err();
        assert!(err.to_string().contains("version 2"), "{err}");
    }

    #[test]
    fn non_finite_parameters_are_not_saved() {
        let mut ckpt = trained_checkpoint();
        ckpt.model.params_mut().head.bias[0] = f64::NAN;
        assert!(checkpoint_to_string(&ckpt).is_err());
    }

    #[test]
    fn gradients_layout_matches_optimizer() {
        let ckpt = trained_checkpoint();
        let g = Gradients::zeros_like(ckpt.model.params());
        let lens: Vec<usize> = g.tensors().iter().map(|t| t.len()).collect();
        let state: Vec<usize> = ckpt.optimizer.m.iter().map(Vec::len).collect();
        assert_eq!(lens, state);
    }
}
