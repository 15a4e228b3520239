use ndarray::Array2;

use super::config::TrainingConfig;
use super::loss::{total_loss, BatchOutputs, LossBreakdown};
use super::sampling::{batch_inputs, sample_batch};
use crate::datasets::CurveDataset;
use crate::error::{Error, Result};
use crate::nn::{adam_step, AdamState, ForwardCache, Gradients, Mlp, MlpCheckpoint, Mode, TrainingMetadata};
use crate::rng::seeded;

const INIT_STREAM: u64 = 1;
const STEP_STREAM: u64 = 2;
const TRAIN_PROBE_STREAM: u64 = 3;
const VALIDATION_PROBE_STREAM: u64 = 4;
const LOSS_HISTORY_LEN: usize = 16;

/// Per-epoch losses; epoch 0 is the untrained network.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_invariance: f64,
    pub val_orthogonality: f64,
}

#[derive(Debug, Clone)]
pub struct TrainingOutcome {
    /// Lowest validation loss seen, or the last good state after an abort.
    pub best: MlpCheckpoint,
    pub metrics: Vec<EpochMetrics>,
    /// Why training stopped early, if it did.
    pub aborted: Option<String>,
}

fn outputs(slots: Vec<Array2<f64>>) -> Result<BatchOutputs> {
    let mut it = slots.into_iter();
    let anchor = it.next().expect("anchor slot");
    let positive = it.next().expect("positive slot");
    BatchOutputs::new(anchor, positive, it.collect())
}

/// Siamese forward of every slot with shared parameters; each slot gets its
/// own batch statistics in train mode.
fn forward_slots(model: &Mlp, inputs: &[Array2<f64>], mode: Mode) -> Result<(BatchOutputs, Vec<ForwardCache>)> {
    let mut outs = Vec::with_capacity(inputs.len());
    let mut caches = Vec::new();
    for x in inputs {
        let fwd = model.forward(x.view(), mode)?;
        outs.push(fwd.outputs);
        caches.extend(fwd.cache);
    }
    Ok((outputs(outs)?, caches))
}

/// Loss of one batch given per-slot inputs.
pub fn batch_loss(model: &Mlp, inputs: &[Array2<f64>], mode: Mode) -> Result<LossBreakdown> {
    let (out, _) = forward_slots(model, inputs, mode)?;
    Ok(total_loss(&out)?.0)
}

/// Train-mode loss and its gradient with respect to every trainable
/// parameter, plus the caches needed to update running statistics.
pub fn batch_loss_and_gradients(
    model: &Mlp,
    inputs: &[Array2<f64>],
) -> Result<(LossBreakdown, Gradients, Vec<ForwardCache>)> {
    let (out, caches) = forward_slots(model, inputs, Mode::Train)?;
    let (loss, grad) = total_loss(&out)?;
    let mut grads = Gradients::zeros_like(model.params());
    for (cache, g) in caches.iter().zip(grad.slots()) {
        grads.accumulate(&model.backward(cache, g.view())?);
    }
    Ok((loss, grads, caches))
}

struct Probe {
    batches: Vec<Vec<Array2<f64>>>,
}

impl Probe {
    fn sample(dataset: &CurveDataset, config: &TrainingConfig, stream: u64) -> Result<Self> {
        let batches = (0..config.probe_batches)
            .map(|b| Ok(batch_inputs(&sample_batch(dataset, config, config.seed, &[stream, b as u64])?)))
            .collect::<Result<_>>()?;
        Ok(Self { batches })
    }

    /// Mean eval-mode loss over the probe batches.
    fn evaluate(&self, model: &Mlp) -> Result<LossBreakdown> {
        let mut acc = LossBreakdown {
            total: 0.0,
            invariance: 0.0,
            orthogonality: 0.0,
        };
        for inputs in &self.batches {
            let l = batch_loss(model, inputs, Mode::Eval)?;
            acc.total += l.total;
            acc.invariance += l.invariance;
            acc.orthogonality += l.orthogonality;
        }
        let n = self.batches.len() as f64;
        Ok(LossBreakdown {
            total: acc.total / n,
            invariance: acc.invariance / n,
            orthogonality: acc.orthogonality / n,
        })
    }
}

fn checkpoint(model: &Mlp, state: &AdamState, config: &TrainingConfig, epoch: usize, history: &[f64]) -> MlpCheckpoint {
    let mut hyper = config.adam;
    hyper.lr = learning_rate(config, epoch + 1);
    let tail = history.len().saturating_sub(LOSS_HISTORY_LEN);
    MlpCheckpoint::new(
        model.clone(),
        hyper,
        state.clone(),
        TrainingMetadata {
            seed: config.seed,
            epoch,
            group: Some(config.group),
            half_width: config.half_width,
            loss_history: history[tail..].to_vec(),
        },
    )
}

fn learning_rate(config: &TrainingConfig, epoch: usize) -> f64 {
    config.adam.lr * config.lr_decay.powi(epoch.saturating_sub(1) as i32)
}

fn metrics_at(epoch: usize, train_probe: &Probe, val_probe: &Probe, model: &Mlp) -> Result<EpochMetrics> {
    let train = train_probe.evaluate(model)?;
    let val = val_probe.evaluate(model)?;
    let m = EpochMetrics {
        epoch,
        train_loss: train.total,
        val_loss: val.total,
        val_invariance: val.invariance,
        val_orthogonality: val.orthogonality,
    };
    if !(m.train_loss.is_finite() && m.val_loss.is_finite()) {
        return Err(Error::Numeric(format!("non-finite probe loss at epoch {epoch}")));
    }
    Ok(m)
}

/// Trains a fresh network; see [`train_with_progress`].
pub fn train(train_set: &CurveDataset, val_set: &CurveDataset, config: &TrainingConfig) -> Result<TrainingOutcome> {
    train_with_progress(train_set, val_set, config, |_| {})
}

/// Runs `epochs × steps_per_epoch` Adam steps on freshly sampled batches and
/// keeps the checkpoint with the lowest validation loss. `progress` sees each
/// epoch's metrics as they are computed. Non-finite losses or gradients stop
/// training early; the outcome then carries the last good checkpoint.
pub fn train_with_progress(
    train_set: &CurveDataset,
    val_set: &CurveDataset,
    config: &TrainingConfig,
    mut progress: impl FnMut(&EpochMetrics),
) -> Result<TrainingOutcome> {
    config.validate()?;
    let mut model = Mlp::new(config.model, &mut seeded(config.seed, &[INIT_STREAM]))?;
    let mut state = AdamState::new(model.params());
    let train_probe = Probe::sample(train_set, config, TRAIN_PROBE_STREAM)?;
    let val_probe = Probe::sample(val_set, config, VALIDATION_PROBE_STREAM)?;

    let first = metrics_at(0, &train_probe, &val_probe, &model)?;
    progress(&first);
    let mut history = vec![first.val_loss];
    let mut best_loss = first.val_loss;
    let mut best = checkpoint(&model, &state, config, 0, &history);
    let mut metrics = vec![first];

    for epoch in 1..=config.epochs {
        let mut hyper = config.adam;
        hyper.lr = learning_rate(config, epoch);
        for s in 0..config.steps_per_epoch {
            let step = ((epoch - 1) * config.steps_per_epoch + s) as u64;
            let inputs = batch_inputs(&sample_batch(train_set, config, config.seed, &[STEP_STREAM, step])?);
            let result = batch_loss_and_gradients(&model, &inputs).and_then(|(loss, grads, caches)| {
                if !loss.total.is_finite() {
                    return Err(Error::Numeric(format!("non-finite loss {}", loss.total)));
                }
                let mut next = model.clone();
                adam_step(next.params_mut(), &grads, &mut state, &hyper)?;
                for cache in &caches {
                    next.update_running_stats(cache);
                }
                Ok(next)
            });
            match result {
                Ok(next) => model = next,
                Err(e) if e.class() == crate::error::ErrorClass::Numeric => {
                    return Ok(TrainingOutcome {
                        best,
                        metrics,
                        aborted: Some(format!("epoch {epoch} step {step}: {e}")),
                    });
                }
                Err(e) => return Err(e),
            }
        }
        let m = match metrics_at(epoch, &train_probe, &val_probe, &model) {
            Ok(m) => m,
            Err(e) => {
                return Ok(TrainingOutcome {
                    best,
                    metrics,
                    aborted: Some(e.to_string()),
                })
            }
        };
        progress(&m);
        history.push(m.val_loss);
        if m.val_loss < best_loss {
            best_loss = m.val_loss;
            best = checkpoint(&model, &state, config, epoch, &history);
        }
        metrics.push(m);
    }
    best.metadata.loss_history = history[history.len().saturating_sub(LOSS_HISTORY_LEN)..].to_vec();
    Ok(TrainingOutcome {
        best,
        metrics,
        aborted: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{GeneratorConfig, Split};
    use crate::nn::ModelConfig;
    use crate::signature::Group;
    use rand::Rng;

    fn dataset(n: usize, seed: u64) -> CurveDataset {
        let mut rng = seeded(seed, &[]);
        let gen = GeneratorConfig::default();
        CurveDataset::new((0..n).map(|_| gen.generate(&mut rng).unwrap()).collect(), Split::Train).unwrap()
    }

    fn small_config() -> TrainingConfig {
        TrainingConfig {
            negatives: 2,
            batch_size: 8,
            epochs: 2,
            steps_per_epoch: 15,
            probe_batches: 2,
            seed: 3,
            ..TrainingConfig::for_group(Group::Affine).with_half_width(4)
        }
    }

    #[test]
    fn end_to_end_gradient_check() {
        let mut rng = seeded(0, &[]);
        let config = ModelConfig {
            first_block_width: 8,
            layers_per_block: 1,
            num_blocks: 2,
            ..ModelConfig::for_half_width(2)
        };
        let model = Mlp::new(config, &mut rng).unwrap();
        let inputs: Vec<Array2<f64>> = (0..4)
            .map(|_| Array2::from_shape_simple_fn((4, 10), || rng.random_range(-1.0..1.0)))
            .collect();
        let (_, grads, _) = batch_loss_and_gradients(&model, &inputs).unwrap();
        let analytic: Vec<f64> = grads.tensors().into_iter().flatten().copied().collect();
        let loss = |m: &Mlp| batch_loss(m, &inputs, Mode::Train).unwrap().total;
        let h = 1e-4;
        let mut idx = 0;
        let mut worst = 0.0f64;
        for t in 0..model.params().trainable().len() {
            for k in 0..model.params().trainable()[t].len() {
                let (mut p, mut m) = (model.clone(), model.clone());
                p.params_mut().trainable_mut()[t][k] += h;
                m.params_mut().trainable_mut()[t][k] -= h;
                let num = (loss(&p) - loss(&m)) / (2.0 * h);
                let a = analytic[idx];
                worst = worst.max((a - num).abs() / a.abs().max(num.abs()).max(1e-6));
                idx += 1;
            }
        }
        assert!(worst < 1e-4, "worst relative error {worst}");
    }

    #[test]
    fn smoke_run_is_reproducible_and_learns() {
        let (tr, val) = (dataset(6, 1), dataset(3, 2));
        let config = small_config();
        let a = train(&tr, &val, &config).unwrap();
        let b = train(&tr, &val, &config).unwrap();
        assert!(a.aborted.is_none());
        assert_eq!(a.metrics, b.metrics);
        assert_eq!(a.best, b.best);
        assert_eq!(a.metrics.len(), config.epochs + 1);
        assert!(a.metrics[2].train_loss < a.metrics[0].train_loss, "{:?}", a.metrics);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let (tr, val) = (dataset(2, 1), dataset(2, 2));
        let mut config = small_config();
        config.epochs = 0;
        assert!(train(&tr, &val, &config).is_err());
    }
}
