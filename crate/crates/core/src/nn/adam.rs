use serde::{Deserialize, Serialize};

use super::mlp::{Gradients, MlpParameters};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment estimates, one flat vector per trainable tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub step: u64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(params: &MlpParameters) -> Self {
        let zeros: Vec<Vec<f64>> = params.trainable().iter().map(|t| vec![0.0; t.len()]).collect();
        Self {
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    fn matches(&self, params: &MlpParameters) -> bool {
        let lens: Vec<usize> = params.trainable().iter().map(|t| t.len()).collect();
        self.m.len() == lens.len()
            && self.v.len() == lens.len()
            && self.m.iter().zip(&self.v).zip(&lens).all(|((m, v), &n)| m.len() == n && v.len() == n)
    }
}

/// One bias-corrected Adam update. Nothing is modified when the gradients
/// contain a non-finite value.
pub fn adam_step(params: &mut MlpParameters, grads: &Gradients, state: &mut AdamState, hyper: &AdamHyper) -> Result<()> {
    let g = grads.tensors();
    if !state.matches(params) || g.len() != state.m.len() || g.iter().zip(&state.m).any(|(a, b)| a.len() != b.len()) {
        return Err(Error::Shape("optimizer state does not match parameters".into()));
    }
    for (t, tensor) in g.iter().enumerate() {
        if let Some(k) = tensor.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite gradient {} in tensor {t} entry {k}",
                tensor[k]
            )));
        }
    }
    state.step += 1;
    let step = state.step as i32;
    let c1 = 1.0 - hyper.beta1.powi(step);
    let c2 = 1.0 - hyper.beta2.powi(step);
    for (((p, g), m), v) in params.trainable_mut().into_iter().zip(&g).zip(&mut state.m).zip(&mut state.v) {
        for k in 0..p.len() {
            m[k] = hyper.beta1 * m[k] + (1.0 - hyper.beta1) * g[k];
            v[k] = hyper.beta2 * v[k] + (1.0 - hyper.beta2) * g[k] * g[k];
            let m_hat = m[k] / c1;
            let v_hat = v[k] / c2;
            p[k] -= hyper.lr * m_hat / (v_hat.sqrt() + hyper.eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Mlp, ModelConfig};
    use crate::rng::seeded;

    fn model() -> Mlp {
        Mlp::new(ModelConfig::for_half_width(1), &mut seeded(3, &[])).unwrap()
    }

    #[test]
    fn zero_gradient_keeps_parameters() {
        let mut mlp = model();
        let before = mlp.clone();
        let mut state = AdamState::new(mlp.params());
        let grads = Gradients::zeros_like(mlp.params());
        adam_step(mlp.params_mut(), &grads, &mut state, &AdamHyper::default()).unwrap();
        assert_eq!(mlp, before);
        assert_eq!(state.step, 1);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut mlp = model();
        let before = mlp.clone();
        let mut state = AdamState::new(mlp.params());
        let mut grads = Gradients::zeros_like(mlp.params());
        grads.head.bias.fill(0.37);
        grads.head.weight.fill(-2.5);
        let hyper = AdamHyper::default();
        adam_step(mlp.params_mut(), &grads, &mut state, &hyper).unwrap();
        // m̂ = g and v̂ = g² after one step, so Δ = lr·g/(|g| + ε).
        let expect = |g: f64| -hyper.lr * g / (g.abs() + hyper.eps);
        for (a, b) in mlp.params().head.bias.iter().zip(&before.params().head.bias) {
            assert!((a - b - expect(0.37)).abs() < 1e-15);
        }
        for (a, b) in mlp.params().head.weight.iter().zip(&before.params().head.weight) {
            assert!((a - b - expect(-2.5)).abs() < 1e-15);
        }
        assert_eq!(mlp.params().hidden, before.params().hidden);
    }

    #[test]
    fn rejects_non_finite_gradients_untouched() {
        let mut mlp = model();
        let before = mlp.clone();
        let mut state = AdamState::new(mlp.params());
        let mut grads = Gradients::zeros_like(mlp.params());
        grads.hidden[1].norm.gamma[0] = f64::INFINITY;
        let err = adam_step(mlp.params_mut(), &grads, &mut state, &AdamHyper::default()).unwrap_err();
        assert!(err.to_string().contains("tensor 6"), "{err}");
        assert_eq!(mlp, before);
        assert_eq!(state.step, 0);
    }

    #[test]
    fn rejects_mismatched_state() {
        let mut mlp = model();
        let other = Mlp::new(ModelConfig::for_half_width(2), &mut seeded(3, &[])).unwrap();
        let mut state = AdamState::new(other.params());
        let grads = Gradients::zeros_like(mlp.params());
        assert!(adam_step(mlp.params_mut(), &grads, &mut state, &AdamHyper::default()).is_err());
    }
}
