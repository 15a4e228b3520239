use ndarray::Array2;
use rand::Rng;

use crate::axiomatic::axiomatic_signature;
use crate::error::{Error, Result};
use crate::geometry::PlanarCurve;
use crate::nn::Mlp;
use crate::rng::seeded;
use crate::signature::{Group, SignatureCurve};

use super::loss::pearson;

/// Per-point network signature. Points whose neighborhood cannot be
/// canonicalized are marked invalid.
pub fn evaluate_model(model: &Mlp, curve: &PlanarCurve, half_width: usize) -> Result<SignatureCurve> {
    let width = 2 * half_width + 1;
    if model.config().input_dim != 2 * width {
        return Err(Error::Shape(format!(
            "model expects {} inputs, neighborhoods of half-width {half_width} give {}",
            model.config().input_dim,
            2 * width
        )));
    }
    let n = curve.len();
    let mut inputs = Array2::zeros((n, 2 * width));
    let mut valid = vec![false; n];
    for i in 0..n {
        if let Ok(sample) = curve.neighborhood(i, half_width)?.canonicalize() {
            sample.flatten_into(inputs.row_mut(i).as_slice_mut().expect("standard layout"));
            valid[i] = true;
        }
    }
    let out = model.predict(inputs.view())?;
    let estimates = (0..n)
        .map(|i| {
            let p = [out[(i, 0)], out[(i, 1)]];
            (valid[i] && p[0].is_finite() && p[1].is_finite()).then_some(p)
        })
        .collect();
    Ok(SignatureCurve::from_estimates(estimates))
}

/// Something that maps a curve to its `(κ, κ_s)` signature.
#[derive(Debug, Clone)]
pub enum Estimator {
    Model(Box<Mlp>),
    Axiomatic(Group),
}

impl Estimator {
    pub fn model(model: Mlp) -> Result<Self> {
        if model.config().half_width().is_none() {
            return Err(Error::Shape(format!(
                "input_dim {} is not a neighborhood size",
                model.config().input_dim
            )));
        }
        Ok(Estimator::Model(Box::new(model)))
    }

    pub fn signature(&self, curve: &PlanarCurve) -> Result<SignatureCurve> {
        match self {
            Estimator::Model(m) => evaluate_model(m, curve, m.config().half_width().expect("checked on construction")),
            Estimator::Axiomatic(g) => axiomatic_signature(curve, *g),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Estimator::Model(_) => "model".into(),
            Estimator::Axiomatic(g) => format!("axiomatic-{g}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PearsonPoint {
    pub count: usize,
    pub abs_rho: f64,
}

/// For each `M` in `counts`, `|ρ|` between κ and κ_s over `M` random valid
/// (curve, point) pairs. Each count draws from its own stream.
pub fn pearson_experiment(
    estimator: &Estimator,
    curves: &[PlanarCurve],
    counts: &[usize],
    seed: u64,
) -> Result<Vec<PearsonPoint>> {
    if curves.is_empty() {
        return Err(Error::InvalidArgument("no curves".into()));
    }
    if let Some(&bad) = counts.iter().find(|&&m| m < 2) {
        return Err(Error::InvalidArgument(format!("sample counts must be >= 2, got {bad}")));
    }
    let signatures: Vec<SignatureCurve> = curves.iter().map(|c| estimator.signature(c)).collect::<Result<_>>()?;
    let pools: Vec<Vec<[f64; 2]>> = signatures.iter().map(|s| s.valid_points().collect()).collect();
    let usable: Vec<usize> = (0..pools.len()).filter(|&i| !pools[i].is_empty()).collect();
    if usable.is_empty() {
        return Err(Error::Degenerate("no valid signature points".into()));
    }
    counts
        .iter()
        .map(|&m| {
            let mut rng = seeded(seed, &[m as u64]);
            let mut samples = Array2::zeros((m, 2));
            for mut row in samples.rows_mut() {
                let pool = &pools[usable[rng.random_range(0..usable.len())]];
                let p = pool[rng.random_range(0..pool.len())];
                row[0] = p[0];
                row[1] = p[1];
            }
            let rho = pearson(samples.view())?.rho;
            Ok(PearsonPoint { count: m, abs_rho: rho.abs() })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::GeneratorConfig;
    use crate::nn::ModelConfig;
    use crate::smooth::Ellipse;

    fn curves(n: usize) -> Vec<PlanarCurve> {
        let mut rng = seeded(4, &[]);
        (0..n).map(|_| GeneratorConfig::default().generate(&mut rng).unwrap()).collect()
    }

    #[test]
    fn zero_head_gives_origin_signature() {
        let mut model = Mlp::new(ModelConfig::for_half_width(3), &mut seeded(0, &[])).unwrap();
        model.params_mut().head.weight.fill(0.0);
        let curve = Ellipse { a: 2.0, b: 1.0 }.sample_closed(50).unwrap();
        let sig = evaluate_model(&model, &curve, 3).unwrap();
        assert_eq!(sig.len(), 50);
        assert!(sig.valid_points().all(|p| p == [0.0, 0.0]));
        assert!(evaluate_model(&model, &curve, 4).is_err());
    }

    #[test]
    fn model_signature_is_deterministic() {
        let model = Mlp::new(ModelConfig::for_half_width(3), &mut seeded(0, &[])).unwrap();
        let curve = &curves(1)[0];
        let a = evaluate_model(&model, curve, 3).unwrap();
        let b = evaluate_model(&model, curve, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), curve.len());
    }

    #[test]
    fn two_samples_are_perfectly_correlated() {
        let est = Estimator::Axiomatic(Group::Euclidean);
        let series = pearson_experiment(&est, &curves(3), &[2, 2, 50], 1).unwrap();
        assert_eq!(series.len(), 3);
        assert!((series[0].abs_rho - 1.0).abs() < 1e-12);
        assert_eq!(series[0], series[1]);
        assert_eq!(series, pearson_experiment(&est, &curves(3), &[2, 2, 50], 1).unwrap());
        assert!(pearson_experiment(&est, &curves(1), &[1], 1).is_err());
    }
}
