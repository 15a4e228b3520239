use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{AdamHyper, ModelConfig};
use crate::signature::Group;

/// Closed interval `[lo, hi]`; a single value when `lo == hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        let interval = Self { lo, hi };
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::InvalidArgument(format!("invalid interval [{lo}, {hi}]")));
        }
        Ok(interval)
    }

    pub fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    fn is_point(&self, v: f64) -> bool {
        self.lo == v && self.hi == v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub group: Group,
    pub model: ModelConfig,
    /// Neighborhoods have `2·half_width + 1` points.
    pub half_width: usize,
    /// Negatives per tuplet.
    pub negatives: usize,
    /// Tuplets per batch.
    pub batch_size: usize,
    pub det: Interval,
    pub cond: Interval,
    pub downsample_ratio: Interval,
    pub pmf_concentration: f64,
    pub epochs: usize,
    pub steps_per_epoch: usize,
    /// Fixed batches used for the per-epoch train and validation losses.
    pub probe_batches: usize,
    pub seed: u64,
    pub adam: AdamHyper,
    /// Learning rate multiplier applied after every epoch.
    pub lr_decay: f64,
}

impl TrainingConfig {
    /// Defaults with the transform ranges the group allows: unit determinant
    /// and condition for Euclidean, unit determinant for equiaffine.
    pub fn for_group(group: Group) -> Self {
        let (det, cond) = match group {
            Group::Euclidean => (Interval::point(1.0), Interval::point(1.0)),
            Group::Equiaffine => (Interval::point(1.0), Interval { lo: 1.0, hi: 4.0 }),
            Group::Affine => (Interval { lo: 0.5, hi: 3.0 }, Interval { lo: 1.0, hi: 4.0 }),
        };
        Self {
            group,
            model: ModelConfig::for_half_width(8),
            half_width: 8,
            negatives: 4,
            batch_size: 32,
            det,
            cond,
            downsample_ratio: Interval { lo: 0.5, hi: 1.0 },
            pmf_concentration: 1.0,
            epochs: 20,
            steps_per_epoch: 1000,
            probe_batches: 8,
            seed: 0,
            adam: AdamHyper::default(),
            lr_decay: 1.0,
        }
    }

    /// Sets the half-width and resizes the network input to match.
    pub fn with_half_width(mut self, half_width: usize) -> Self {
        self.half_width = half_width;
        self.model.input_dim = 2 * (2 * half_width + 1);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        for (name, i) in [("det", self.det), ("cond", self.cond), ("downsample ratio", self.downsample_ratio)] {
            Interval::new(i.lo, i.hi).map_err(|e| Error::InvalidArgument(format!("{name}: {e}")))?;
        }
        if !(self.det.lo > 0.0) {
            return bad(format!("det range must be positive, got [{}, {}]", self.det.lo, self.det.hi));
        }
        if !(self.cond.lo >= 1.0) {
            return bad(format!("cond range must be >= 1, got [{}, {}]", self.cond.lo, self.cond.hi));
        }
        if !(self.downsample_ratio.lo > 0.0 && self.downsample_ratio.hi <= 1.0) {
            return bad("downsample ratio must lie in (0, 1]".into());
        }
        match self.group {
            Group::Euclidean if !(self.det.is_point(1.0) && self.cond.is_point(1.0)) => {
                return bad("euclidean training requires det = cond = 1".into())
            }
            Group::Equiaffine if !self.det.is_point(1.0) => return bad("equiaffine training requires det = 1".into()),
            _ => {}
        }
        if self.half_width < 1 || self.negatives < 1 || self.batch_size < 2 {
            return bad("need half_width >= 1, negatives >= 1 and batch_size >= 2".into());
        }
        if self.epochs < 1 || self.steps_per_epoch < 1 || self.probe_batches < 1 {
            return bad("epochs, steps_per_epoch and probe_batches must be >= 1".into());
        }
        if !(self.pmf_concentration > 0.0) {
            return bad("pmf concentration must be positive".into());
        }
        let a = &self.adam;
        if !(a.lr > 0.0 && a.eps > 0.0 && (0.0..1.0).contains(&a.beta1) && (0.0..1.0).contains(&a.beta2)) {
            return bad("invalid Adam hyperparameters".into());
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return bad("lr_decay must lie in (0, 1]".into());
        }
        if self.model.half_width() != Some(self.half_width) {
            return bad(format!(
                "model input_dim {} does not match half_width {}",
                self.model.input_dim, self.half_width
            ));
        }
        self.model.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_defaults_validate() {
        for g in [Group::Euclidean, Group::Equiaffine, Group::Affine] {
            TrainingConfig::for_group(g).validate().unwrap();
        }
    }

    #[test]
    fn euclidean_rejects_scaling() {
        let mut c = TrainingConfig::for_group(Group::Euclidean);
        c.det = Interval { lo: 0.5, hi: 3.0 };
        assert!(c.validate().is_err());
        let mut c = TrainingConfig::for_group(Group::Equiaffine);
        c.det = Interval { lo: 0.5, hi: 1.0 };
        assert!(c.validate().is_err());
    }

    #[test]
    fn rejects_bad_ranges() {
        assert!(Interval::new(2.0, 1.0).is_err());
        let mut c = TrainingConfig::for_group(Group::Affine);
        c.downsample_ratio = Interval { lo: 0.5, hi: 1.5 };
        assert!(c.validate().is_err());
        let mut c = TrainingConfig::for_group(Group::Affine);
        c.cond = Interval { lo: 0.5, hi: 2.0 };
        assert!(c.validate().is_err());
    }
}
