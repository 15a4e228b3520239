//! Invariance (tuplet) and orthogonality (Pearson) losses with gradients with
//! respect to the network outputs.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// Variance sums below this count as constant.
const MIN_VARIANCE: f64 = 1e-24;

/// Network outputs for one batch of `K` tuplets: one `K × 2` matrix per slot.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchOutputs {
    pub anchor: Array2<f64>,
    pub positive: Array2<f64>,
    pub negatives: Vec<Array2<f64>>,
}

impl BatchOutputs {
    pub fn new(anchor: Array2<f64>, positive: Array2<f64>, negatives: Vec<Array2<f64>>) -> Result<Self> {
        let k = anchor.nrows();
        if negatives.is_empty() {
            return Err(Error::InvalidArgument("at least one negative per tuplet".into()));
        }
        let slots = std::iter::once(&anchor).chain(std::iter::once(&positive)).chain(&negatives);
        for s in slots {
            if s.dim() != (k, 2) {
                return Err(Error::Shape(format!("slot of shape {:?}, expected ({k}, 2)", s.dim())));
            }
            if s.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric("non-finite network output".into()));
            }
        }
        if k == 0 {
            return Err(Error::InvalidArgument("empty batch".into()));
        }
        Ok(Self {
            anchor,
            positive,
            negatives,
        })
    }

    pub fn batch_size(&self) -> usize {
        self.anchor.nrows()
    }

    pub fn negatives_per_tuplet(&self) -> usize {
        self.negatives.len()
    }

    /// Anchor, positive, then each negative slot.
    pub fn slots(&self) -> impl Iterator<Item = &Array2<f64>> {
        std::iter::once(&self.anchor)
            .chain(std::iter::once(&self.positive))
            .chain(&self.negatives)
    }

    fn zeros_like(&self) -> Self {
        let z = || Array2::zeros(self.anchor.dim());
        Self {
            anchor: z(),
            positive: z(),
            negatives: self.negatives.iter().map(|_| z()).collect(),
        }
    }

    fn slots_mut(&mut self) -> impl Iterator<Item = &mut Array2<f64>> {
        std::iter::once(&mut self.anchor)
            .chain(std::iter::once(&mut self.positive))
            .chain(&mut self.negatives)
    }
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// `log(1 + Σ_j exp(‖a − p‖ − ‖a − n_j‖))`, evaluated as a log-sum-exp.
pub fn tuplet_loss(anchor: [f64; 2], positive: [f64; 2], negatives: &[[f64; 2]]) -> f64 {
    let d = distance(anchor, positive);
    let exponents: Vec<f64> = negatives.iter().map(|&n| d - distance(anchor, n)).collect();
    log1p_sum_exp(&exponents)
}

/// `log(1 + Σ exp(x_j))`.
fn log1p_sum_exp(x: &[f64]) -> f64 {
    let max = x.iter().copied().fold(0.0f64, f64::max);
    let sum: f64 = (-max).exp() + x.iter().map(|v| (v - max).exp()).sum::<f64>();
    max + sum.ln()
}

/// Mean of per-tuplet losses.
pub fn invariance_loss(losses: &[f64]) -> Result<f64> {
    if losses.is_empty() {
        return Err(Error::InvalidArgument("no tuplet losses".into()));
    }
    Ok(losses.iter().sum::<f64>() / losses.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pearson {
    pub rho: f64,
    /// Set when either column was constant; `rho` is then 0.
    pub degenerate: bool,
}

fn row(m: &ArrayView2<f64>, i: usize) -> [f64; 2] {
    [m[(i, 0)], m[(i, 1)]]
}

struct Moments {
    dx: Vec<f64>,
    dy: Vec<f64>,
    sxx: f64,
    syy: f64,
    sxy: f64,
}

fn moments(outputs: &ArrayView2<f64>) -> Moments {
    let k = outputs.nrows() as f64;
    let mx = outputs.column(0).sum() / k;
    let my = outputs.column(1).sum() / k;
    let dx: Vec<f64> = outputs.column(0).iter().map(|v| v - mx).collect();
    let dy: Vec<f64> = outputs.column(1).iter().map(|v| v - my).collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    Moments {
        sxx: dot(&dx, &dx),
        syy: dot(&dy, &dy),
        sxy: dot(&dx, &dy),
        dx,
        dy,
    }
}

impl Moments {
    fn degenerate(&self) -> bool {
        let k = self.dx.len() as f64;
        self.sxx / k < MIN_VARIANCE || self.syy / k < MIN_VARIANCE
    }

    fn rho(&self) -> f64 {
        (self.sxy / (self.sxx * self.syy).sqrt()).clamp(-1.0, 1.0)
    }
}

/// Sample correlation between the two output columns.
pub fn pearson(outputs: ArrayView2<f64>) -> Result<Pearson> {
    if outputs.ncols() != 2 || outputs.nrows() < 2 {
        return Err(Error::InvalidArgument(format!(
            "pearson needs a K × 2 matrix with K >= 2, got {:?}",
            outputs.dim()
        )));
    }
    let m = moments(&outputs);
    if m.degenerate() {
        return Ok(Pearson { rho: 0.0, degenerate: true });
    }
    Ok(Pearson { rho: m.rho(), degenerate: false })
}

/// Value and gradient of `|ρ|` for one slot; the gradient is zero when
/// `ρ = 0` or the slot is degenerate.
fn abs_pearson_with_grad(outputs: &ArrayView2<f64>) -> (f64, Array2<f64>) {
    let m = moments(outputs);
    let mut grad = Array2::zeros(outputs.dim());
    if m.degenerate() {
        return (0.0, grad);
    }
    let rho = m.rho();
    let sign = if rho > 0.0 {
        1.0
    } else if rho < 0.0 {
        -1.0
    } else {
        0.0
    };
    if sign != 0.0 {
        let norm = (m.sxx * m.syy).sqrt();
        for i in 0..m.dx.len() {
            grad[(i, 0)] = sign * (m.dy[i] / norm - rho * m.dx[i] / m.sxx);
            grad[(i, 1)] = sign * (m.dx[i] / norm - rho * m.dy[i] / m.syy);
        }
    }
    (rho.abs(), grad)
}

/// Mean absolute correlation over the `m + 2` slots.
pub fn orthogonality_loss(batch: &BatchOutputs) -> Result<f64> {
    if batch.batch_size() < 2 {
        return Err(Error::InvalidArgument("orthogonality loss needs K >= 2".into()));
    }
    let slots = batch.slots().count() as f64;
    let mut total = 0.0;
    for s in batch.slots() {
        total += pearson(s.view())?.rho.abs();
    }
    Ok(total / slots)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossBreakdown {
    pub total: f64,
    pub invariance: f64,
    pub orthogonality: f64,
}

/// `invariance + orthogonality` and its gradient with respect to every output.
pub fn total_loss(batch: &BatchOutputs) -> Result<(LossBreakdown, BatchOutputs)> {
    let k = batch.batch_size();
    if k < 2 {
        return Err(Error::InvalidArgument("total loss needs K >= 2".into()));
    }
    let m = batch.negatives_per_tuplet();
    let mut grad = batch.zeros_like();
    let mut invariance = 0.0;
    let mut exponents = vec![0.0; m];
    let mut weights = vec![0.0; m];
    let (a_view, p_view) = (batch.anchor.view(), batch.positive.view());
    for i in 0..k {
        let a = row(&a_view, i);
        let p = row(&p_view, i);
        let d = distance(a, p);
        let mut neg_dist = vec![0.0; m];
        for (j, n) in batch.negatives.iter().enumerate() {
            neg_dist[j] = distance(a, row(&n.view(), i));
            exponents[j] = d - neg_dist[j];
        }
        let loss = log1p_sum_exp(&exponents);
        invariance += loss;
        // ∂loss/∂exponent_j = exp(exponent_j − loss).
        for j in 0..m {
            weights[j] = (exponents[j] - loss).exp() / k as f64;
        }
        let w_sum: f64 = weights.iter().sum();
        let unit = |from: [f64; 2], to: [f64; 2], len: f64| {
            if len > 0.0 {
                [(from[0] - to[0]) / len, (from[1] - to[1]) / len]
            } else {
                [0.0, 0.0]
            }
        };
        let u_ap = unit(a, p, d);
        for c in 0..2 {
            grad.anchor[(i, c)] += w_sum * u_ap[c];
            grad.positive[(i, c)] -= w_sum * u_ap[c];
        }
        for (j, n) in batch.negatives.iter().enumerate() {
            let u_an = unit(a, row(&n.view(), i), neg_dist[j]);
            for c in 0..2 {
                grad.anchor[(i, c)] -= weights[j] * u_an[c];
                grad.negatives[j][(i, c)] += weights[j] * u_an[c];
            }
        }
    }
    let invariance = invariance / k as f64;
    let slot_count = (m + 2) as f64;
    let mut orthogonality = 0.0;
    for (s, g) in batch.slots().zip(grad.slots_mut()) {
        let (value, slot_grad) = abs_pearson_with_grad(&s.view());
        orthogonality += value;
        g.scaled_add(1.0 / slot_count, &slot_grad);
    }
    let orthogonality = orthogonality / slot_count;
    Ok((
        LossBreakdown {
            total: invariance + orthogonality,
            invariance,
            orthogonality,
        },
        grad,
    ))
}
