//! Self-supervised Siamese training of the invariant network.

mod config;
mod evaluate;
mod loss;
mod sampling;
mod train;

pub use config::{Interval, TrainingConfig};
pub use evaluate::{evaluate_model, pearson_experiment, Estimator, PearsonPoint};
pub use loss::{invariance_loss, orthogonality_loss, pearson, total_loss, tuplet_loss, BatchOutputs, LossBreakdown, Pearson};
pub use sampling::{batch_inputs, sample_batch, sample_tuplet, SampleSource, TrainingTuplet};
pub use train::{batch_loss, batch_loss_and_gradients, train, train_with_progress, EpochMetrics, TrainingOutcome};
