//! Fully connected network with batchnorm and sine activations, trained with
//! explicit backpropagation and Adam.

mod adam;
mod checkpoint;
mod config;
mod layers;
mod mlp;

pub use adam::{adam_step, AdamHyper, AdamState};
pub use checkpoint::{
    checkpoint_from_str, checkpoint_to_string, load_checkpoint, save_checkpoint, MlpCheckpoint, TrainingMetadata,
    CHECKPOINT_FORMAT, CHECKPOINT_VERSION,
};
pub use config::ModelConfig;
pub use layers::{sine_backward, sine_forward, BatchNorm, Linear, NormCache, NormGradients};
pub use mlp::{Forward, ForwardCache, Gradients, HiddenLayer, LayerGradients, Mlp, MlpParameters, Mode};
