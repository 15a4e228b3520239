//! Layer primitives with explicit forward and backward passes.
//!
//! Matrices are row-major `batch × features`.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;

/// `y = x·W + b` with `W` stored `in × out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Linear {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            weight: Array2::zeros((fan_in, fan_out)),
            bias: Array1::zeros(fan_out),
        }
    }

    /// Weights uniform in `±ω·√(6 / fan_in)`, zero bias.
    pub fn init<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, omega: f64, rng: &mut R) -> Self {
        let bound = omega * (6.0 / fan_in as f64).sqrt();
        let weight = Array2::from_shape_simple_fn((fan_in, fan_out), || rng.random_range(-bound..=bound));
        Self {
            weight,
            bias: Array1::zeros(fan_out),
        }
    }

    pub fn fan_in(&self) -> usize {
        self.weight.nrows()
    }

    pub fn fan_out(&self) -> usize {
        self.weight.ncols()
    }

    pub fn forward(&self, x: &ArrayView2<f64>) -> Array2<f64> {
        x.dot(&self.weight) + &self.bias
    }

    /// Returns the input gradient and the parameter gradients.
    pub fn backward(&self, x: &ArrayView2<f64>, grad_out: &ArrayView2<f64>) -> (Array2<f64>, Linear) {
        let grads = Linear {
            weight: x.t().dot(grad_out),
            bias: grad_out.sum_axis(Axis(0)),
        };
        (grad_out.dot(&self.weight.t()), grads)
    }
}

/// Per-feature affine normalization with running statistics for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
    pub running_mean: Array1<f64>,
    pub running_var: Array1<f64>,
}

/// Gradients of the trainable batchnorm parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct NormGradients {
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
}

/// Intermediates of a train-mode batchnorm forward.
#[derive(Debug, Clone)]
pub struct NormCache {
    pub normalized: Array2<f64>,
    pub inv_std: Array1<f64>,
    pub batch_mean: Array1<f64>,
    /// Biased (population) variance of the batch.
    pub batch_var: Array1<f64>,
}

impl BatchNorm {
    pub fn new(width: usize) -> Self {
        Self {
            gamma: Array1::ones(width),
            beta: Array1::zeros(width),
            running_mean: Array1::zeros(width),
            running_var: Array1::ones(width),
        }
    }

    pub fn width(&self) -> usize {
        self.gamma.len()
    }

    pub fn forward_train(&self, z: &ArrayView2<f64>, eps: f64) -> (Array2<f64>, NormCache) {
        let b = z.nrows() as f64;
        let mean = z.sum_axis(Axis(0)) / b;
        let centered = z - &mean;
        let var = centered.mapv(|v| v * v).sum_axis(Axis(0)) / b;
        let inv_std = var.mapv(|v| 1.0 / (v + eps).sqrt());
        let normalized = centered * &inv_std;
        let out = &normalized * &self.gamma + &self.beta;
        (
            out,
            NormCache {
                normalized,
                inv_std,
                batch_mean: mean,
                batch_var: var,
            },
        )
    }

    pub fn forward_eval(&self, z: &ArrayView2<f64>, eps: f64) -> Array2<f64> {
        let inv_std = self.running_var.mapv(|v| 1.0 / (v + eps).sqrt());
        let scale = &inv_std * &self.gamma;
        let shift = &self.beta - &(&self.running_mean * &scale);
        z * &scale + &shift
    }

    /// Exponential moving average towards the batch statistics.
    pub fn update_running(&mut self, cache: &NormCache, momentum: f64) {
        self.running_mean
            .zip_mut_with(&cache.batch_mean, |r, &m| *r = (1.0 - momentum) * *r + momentum * m);
        self.running_var
            .zip_mut_with(&cache.batch_var, |r, &v| *r = (1.0 - momentum) * *r + momentum * v);
    }

    /// Backward through a train-mode forward, including the dependence of the
    /// batch mean and variance on every row.
    pub fn backward(&self, cache: &NormCache, grad_out: &ArrayView2<f64>) -> (Array2<f64>, NormGradients) {
        let b = grad_out.nrows() as f64;
        let grads = NormGradients {
            gamma: (grad_out * &cache.normalized).sum_axis(Axis(0)),
            beta: grad_out.sum_axis(Axis(0)),
        };
        let dxhat = grad_out * &self.gamma;
        let sum_dxhat = dxhat.sum_axis(Axis(0));
        let sum_dxhat_xhat = (&dxhat * &cache.normalized).sum_axis(Axis(0));
        let dz = (dxhat * b - &sum_dxhat - &cache.normalized * &sum_dxhat_xhat) * &(&cache.inv_std / b);
        (dz, grads)
    }
}

pub fn sine_forward(y: &ArrayView2<f64>) -> Array2<f64> {
    y.mapv(f64::sin)
}

pub fn sine_backward(y: &ArrayView2<f64>, grad_out: &ArrayView2<f64>) -> Array2<f64> {
    let mut g = y.mapv(f64::cos);
    g *= grad_out;
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use ndarray::Array2;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
        let mut rng = seeded(seed, &[]);
        Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-1.0..1.0))
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
    }

    const H: f64 = 1e-4;

    /// Scalar objective `Σ f(x) ⊙ G` and its finite-difference gradient in `x`.
    fn fd_input_gradient(x: &Array2<f64>, g: &Array2<f64>, f: impl Fn(&Array2<f64>) -> Array2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros(x.dim());
        for idx in ndarray::indices(x.dim()) {
            let mut xp = x.clone();
            xp[idx] += H;
            let mut xm = x.clone();
            xm[idx] -= H;
            out[idx] = ((f(&xp) * g).sum() - (f(&xm) * g).sum()) / (2.0 * H);
        }
        out
    }

    fn max_rel(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
        a.iter().zip(b).map(|(x, y)| rel_err(*x, *y)).fold(0.0, f64::max)
    }

    #[test]
    fn linear_gradients() {
        let mut rng = seeded(1, &[]);
        let layer = Linear::init(5, 3, 1.0, &mut rng);
        let x = random_matrix(4, 5, 2);
        let g = random_matrix(4, 3, 3);
        let (dx, grads) = layer.backward(&x.view(), &g.view());
        let fd = fd_input_gradient(&x, &g, |x| layer.forward(&x.view()));
        assert!(max_rel(&dx, &fd) < 1e-6);
        for idx in ndarray::indices(layer.weight.dim()) {
            let mut p = layer.clone();
            p.weight[idx] += H;
            let mut m = layer.clone();
            m.weight[idx] -= H;
            let num = ((p.forward(&x.view()) * &g).sum() - (m.forward(&x.view()) * &g).sum()) / (2.0 * H);
            assert!(rel_err(grads.weight[idx], num) < 1e-6);
        }
        let bias_fd: Vec<f64> = g.sum_axis(Axis(0)).to_vec();
        assert_eq!(grads.bias.to_vec(), bias_fd);
    }

    #[test]
    fn batchnorm_train_gradients() {
        let mut norm = BatchNorm::new(3);
        norm.gamma = ndarray::arr1(&[0.5, 1.5, -0.7]);
        norm.beta = ndarray::arr1(&[0.1, 0.0, 0.3]);
        let eps = 1e-5;
        let z = random_matrix(6, 3, 4);
        let g = random_matrix(6, 3, 5);
        let (_, cache) = norm.forward_train(&z.view(), eps);
        let (dz, grads) = norm.backward(&cache, &g.view());
        let fd = fd_input_gradient(&z, &g, |z| norm.forward_train(&z.view(), eps).0);
        assert!(max_rel(&dz, &fd) < 1e-4, "{}", max_rel(&dz, &fd));
        for j in 0..3 {
            let objective = |n: &BatchNorm| (n.forward_train(&z.view(), eps).0 * &g).sum();
            let (mut p, mut m) = (norm.clone(), norm.clone());
            p.gamma[j] += H;
            m.gamma[j] -= H;
            assert!(rel_err(grads.gamma[j], (objective(&p) - objective(&m)) / (2.0 * H)) < 1e-6);
            let (mut p, mut m) = (norm.clone(), norm.clone());
            p.beta[j] += H;
            m.beta[j] -= H;
            assert!(rel_err(grads.beta[j], (objective(&p) - objective(&m)) / (2.0 * H)) < 1e-6);
        }
    }

    #[test]
    fn batchnorm_normalizes_batch() {
        let norm = BatchNorm::new(4);
        let z = random_matrix(32, 4, 6) * 7.0 + 3.0;
        let (out, _) = norm.forward_train(&z.view(), 1e-5);
        for col in out.columns() {
            let mean = col.mean().unwrap();
            let var = col.mapv(|v| (v - mean).powi(2)).mean().unwrap();
            assert!(mean.abs() < 1e-12);
            assert!((var - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn running_stats_converge_geometrically() {
        let mut norm = BatchNorm::new(2);
        let z = random_matrix(8, 2, 7) + 2.0;
        let (_, cache) = norm.forward_train(&z.view(), 1e-5);
        let momentum = 0.1;
        let gap0 = (&norm.running_mean - &cache.batch_mean).mapv(f64::abs);
        for k in 1..=20 {
            norm.update_running(&cache, momentum);
            let gap = (&norm.running_mean - &cache.batch_mean).mapv(f64::abs);
            let expected = &gap0 * (1.0 - momentum).powi(k);
            for (a, b) in gap.iter().zip(&expected) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        // Eval mode approaches train mode on the repeated batch.
        for _ in 0..400 {
            norm.update_running(&cache, momentum);
        }
        let train = norm.forward_train(&z.view(), 1e-5).0;
        let eval = norm.forward_eval(&z.view(), 1e-5);
        assert!(max_rel(&train, &eval) < 1e-9);
    }

    #[test]
    fn sine_gradient() {
        let y = random_matrix(3, 4, 8) * 3.0;
        let g = random_matrix(3, 4, 9);
        let dy = sine_backward(&y.view(), &g.view());
        let fd = fd_input_gradient(&y, &g, |y| sine_forward(&y.view()));
        assert!(max_rel(&dy, &fd) < 1e-6);
    }
}
