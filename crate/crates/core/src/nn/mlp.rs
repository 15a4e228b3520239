use ndarray::{Array2, ArrayView2};
use rand::Rng;

use super::config::ModelConfig;
use super::layers::{sine_backward, sine_forward, BatchNorm, Linear, NormCache, NormGradients};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct HiddenLayer {
    pub linear: Linear,
    pub norm: BatchNorm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpParameters {
    pub hidden: Vec<HiddenLayer>,
    pub head: Linear,
}

impl MlpParameters {
    pub fn init<R: Rng + ?Sized>(config: &ModelConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let mut fan_in = config.input_dim;
        let mut hidden = Vec::new();
        for (i, width) in config.hidden_widths().into_iter().enumerate() {
            let omega = if i == 0 { config.first_layer_omega } else { config.hidden_omega };
            hidden.push(HiddenLayer {
                linear: Linear::init(fan_in, width, omega, rng),
                norm: BatchNorm::new(width),
            });
            fan_in = width;
        }
        let head = Linear::init(fan_in, config.output_dim, config.hidden_omega, rng);
        Ok(Self { hidden, head })
    }

    /// Checks tensor shapes against `config` and that running variances are positive.
    pub fn validate(&self, config: &ModelConfig) -> Result<()> {
        let widths = config.hidden_widths();
        if widths.len() != self.hidden.len() {
            return Err(Error::Shape(format!(
                "{} hidden layers, config expects {}",
                self.hidden.len(),
                widths.len()
            )));
        }
        let mut fan_in = config.input_dim;
        for (i, (layer, &w)) in self.hidden.iter().zip(&widths).enumerate() {
            let n = &layer.norm;
            let ok = layer.linear.weight.dim() == (fan_in, w)
                && layer.linear.bias.len() == w
                && [&n.gamma, &n.beta, &n.running_mean, &n.running_var].iter().all(|t| t.len() == w);
            if !ok {
                return Err(Error::Shape(format!("hidden layer {i} does not match width {w}")));
            }
            if n.running_var.iter().any(|&v| !(v > 0.0)) {
                return Err(Error::Shape(format!("hidden layer {i} has non-positive running variance")));
            }
            fan_in = w;
        }
        if self.head.weight.dim() != (fan_in, config.output_dim) || self.head.bias.len() != config.output_dim {
            return Err(Error::Shape("output head does not match config".into()));
        }
        Ok(())
    }

    /// Trainable tensors in a fixed order: per hidden layer weight, bias,
    /// gamma, beta; then head weight and bias.
    pub fn trainable_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::with_capacity(4 * self.hidden.len() + 2);
        for layer in &mut self.hidden {
            out.push(layer.linear.weight.as_slice_mut().expect("standard layout"));
            out.push(layer.linear.bias.as_slice_mut().expect("standard layout"));
            out.push(layer.norm.gamma.as_slice_mut().expect("standard layout"));
            out.push(layer.norm.beta.as_slice_mut().expect("standard layout"));
        }
        out.push(self.head.weight.as_slice_mut().expect("standard layout"));
        out.push(self.head.bias.as_slice_mut().expect("standard layout"));
        out
    }

    pub fn trainable(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::with_capacity(4 * self.hidden.len() + 2);
        for layer in &self.hidden {
            out.push(layer.linear.weight.as_slice().expect("standard layout"));
            out.push(layer.linear.bias.as_slice().expect("standard layout"));
            out.push(layer.norm.gamma.as_slice().expect("standard layout"));
            out.push(layer.norm.beta.as_slice().expect("standard layout"));
        }
        out.push(self.head.weight.as_slice().expect("standard layout"));
        out.push(self.head.bias.as_slice().expect("standard layout"));
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradients {
    pub linear: Linear,
    pub norm: NormGradients,
}

/// Gradients with the same layout as the trainable part of [`MlpParameters`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub hidden: Vec<LayerGradients>,
    pub head: Linear,
}

impl Gradients {
    pub fn zeros_like(params: &MlpParameters) -> Self {
        Self {
            hidden: params
                .hidden
                .iter()
                .map(|l| LayerGradients {
                    linear: Linear::zeros(l.linear.fan_in(), l.linear.fan_out()),
                    norm: NormGradients {
                        gamma: ndarray::Array1::zeros(l.norm.width()),
                        beta: ndarray::Array1::zeros(l.norm.width()),
                    },
                })
                .collect(),
            head: Linear::zeros(params.head.fan_in(), params.head.fan_out()),
        }
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::with_capacity(4 * self.hidden.len() + 2);
        for layer in &self.hidden {
            out.push(layer.linear.weight.as_slice().expect("standard layout"));
            out.push(layer.linear.bias.as_slice().expect("standard layout"));
            out.push(layer.norm.gamma.as_slice().expect("standard layout"));
            out.push(layer.norm.beta.as_slice().expect("standard layout"));
        }
        out.push(self.head.weight.as_slice().expect("standard layout"));
        out.push(self.head.bias.as_slice().expect("standard layout"));
        out
    }

    pub fn accumulate(&mut self, other: &Gradients) {
        for (a, b) in self.hidden.iter_mut().zip(&other.hidden) {
            a.linear.weight += &b.linear.weight;
            a.linear.bias += &b.linear.bias;
            a.norm.gamma += &b.norm.gamma;
            a.norm.beta += &b.norm.beta;
        }
        self.head.weight += &other.head.weight;
        self.head.bias += &other.head.bias;
    }

    pub fn max_abs(&self) -> f64 {
        self.tensors()
            .into_iter()
            .flat_map(|t| t.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Batch statistics; produces a cache for backpropagation.
    Train,
    /// Running statistics; a deterministic per-row function.
    Eval,
}

#[derive(Debug, Clone)]
struct LayerCache {
    input: Array2<f64>,
    norm: NormCache,
    pre_activation: Array2<f64>,
}

/// Everything a train-mode forward keeps for [`Mlp::backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    layers: Vec<LayerCache>,
    head_input: Array2<f64>,
}

impl ForwardCache {
    pub fn batch_size(&self) -> usize {
        self.head_input.nrows()
    }

    /// Normalized pre-activations of hidden layer `i`.
    pub fn normalized(&self, i: usize) -> &Array2<f64> {
        &self.layers[i].norm.normalized
    }
}

#[derive(Debug, Clone)]
pub struct Forward {
    pub outputs: Array2<f64>,
    /// Present iff the forward ran in [`Mode::Train`].
    pub cache: Option<ForwardCache>,
}

/// Multilayer perceptron: configuration plus parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    config: ModelConfig,
    params: MlpParameters,
}

impl Mlp {
    pub fn new<R: Rng + ?Sized>(config: ModelConfig, rng: &mut R) -> Result<Self> {
        let params = MlpParameters::init(&config, rng)?;
        Ok(Self { config, params })
    }

    pub fn from_parts(config: ModelConfig, params: MlpParameters) -> Result<Self> {
        config.validate()?;
        params.validate(&config)?;
        Ok(Self { config, params })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &MlpParameters {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut MlpParameters {
        &mut self.params
    }

    pub fn into_parts(self) -> (ModelConfig, MlpParameters) {
        (self.config, self.params)
    }

    fn check_batch(&self, batch: &ArrayView2<f64>, mode: Mode) -> Result<()> {
        if batch.ncols() != self.config.input_dim {
            return Err(Error::Shape(format!(
                "batch width {} but input_dim {}",
                batch.ncols(),
                self.config.input_dim
            )));
        }
        if mode == Mode::Train && batch.nrows() < 2 {
            return Err(Error::InvalidArgument(
                "train-mode batchnorm needs at least 2 rows".into(),
            ));
        }
        if batch.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidArgument("NaN in network input".into()));
        }
        Ok(())
    }

    /// Pure forward pass; train mode does not touch the running statistics
    /// (see [`Mlp::forward_train`]).
    pub fn forward(&self, batch: ArrayView2<f64>, mode: Mode) -> Result<Forward> {
        self.check_batch(&batch, mode)?;
        let eps = self.config.batchnorm_epsilon;
        let mut x = batch.to_owned();
        let mut layers = Vec::new();
        for layer in &self.params.hidden {
            let z = layer.linear.forward(&x.view());
            let y = match mode {
                Mode::Train => {
                    let (y, norm) = layer.norm.forward_train(&z.view(), eps);
                    let next = sine_forward(&y.view());
                    layers.push(LayerCache {
                        input: std::mem::replace(&mut x, next),
                        norm,
                        pre_activation: y,
                    });
                    continue;
                }
                Mode::Eval => layer.norm.forward_eval(&z.view(), eps),
            };
            x = sine_forward(&y.view());
        }
        let outputs = self.params.head.forward(&x.view());
        let cache = (mode == Mode::Train).then(|| ForwardCache { layers, head_input: x });
        Ok(Forward { outputs, cache })
    }

    /// Eval-mode outputs.
    pub fn predict(&self, batch: ArrayView2<f64>) -> Result<Array2<f64>> {
        Ok(self.forward(batch, Mode::Eval)?.outputs)
    }

    /// Train-mode forward that also moves the running statistics towards this
    /// batch's statistics.
    pub fn forward_train(&mut self, batch: ArrayView2<f64>) -> Result<(Array2<f64>, ForwardCache)> {
        let fwd = self.forward(batch, Mode::Train)?;
        let cache = fwd.cache.expect("train mode produces a cache");
        self.update_running_stats(&cache);
        Ok((fwd.outputs, cache))
    }

    pub fn update_running_stats(&mut self, cache: &ForwardCache) {
        let momentum = self.config.batchnorm_momentum;
        for (layer, c) in self.params.hidden.iter_mut().zip(&cache.layers) {
            layer.norm.update_running(&c.norm, momentum);
        }
    }

    /// Exact gradients of `Σ outputs ⊙ output_gradients` with respect to every
    /// trainable parameter.
    pub fn backward(&self, cache: &ForwardCache, output_gradients: ArrayView2<f64>) -> Result<Gradients> {
        if output_gradients.dim() != (cache.batch_size(), self.config.output_dim)
            || cache.layers.len() != self.params.hidden.len()
        {
            return Err(Error::Shape(format!(
                "output gradients {:?} do not match cached batch of {}",
                output_gradients.dim(),
                cache.batch_size()
            )));
        }
        let (mut grad, head) = self.params.head.backward(&cache.head_input.view(), &output_gradients);
        let mut hidden = Vec::with_capacity(self.params.hidden.len());
        for (layer, c) in self.params.hidden.iter().zip(&cache.layers).rev() {
            let dy = sine_backward(&c.pre_activation.view(), &grad.view());
            let (dz, norm) = layer.norm.backward(&c.norm, &dy.view());
            let (dx, linear) = layer.linear.backward(&c.input.view(), &dz.view());
            hidden.push(LayerGradients { linear, norm });
            grad = dx;
        }
        hidden.reverse();
        Ok(Gradients { hidden, head })
    }
}
