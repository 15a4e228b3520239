use ndarray::Array2;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Interval, TrainingConfig};
use crate::datasets::CurveDataset;
use crate::error::{Error, Result};
use crate::geometry::{
    downsample_count, downsample_indices, extract_neighborhood, random_affine, random_pmf, NeighborhoodSample, Point,
};
use crate::rng::seeded;

const MAX_RETRIES: usize = 20;

/// Curve and point index a sample was cut around.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSource {
    pub curve: usize,
    pub point: usize,
}

/// Canonicalized neighborhoods for one tuplet.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingTuplet {
    pub anchor: NeighborhoodSample,
    pub positive: NeighborhoodSample,
    pub negatives: Vec<NeighborhoodSample>,
    pub anchor_source: SampleSource,
    pub negative_sources: Vec<SampleSource>,
}

fn draw(interval: Interval, rng: &mut impl Rng) -> f64 {
    if interval.lo == interval.hi {
        interval.lo
    } else {
        rng.random_range(interval.lo..=interval.hi)
    }
}

/// One view of a curve: random pmf and ratio, downsample, cut the window
/// around `center` (or a random survivor), random group element, canonicalize.
fn sample_view(
    points: &[Point],
    center: Option<usize>,
    config: &TrainingConfig,
    rng: &mut impl Rng,
) -> Result<(NeighborhoodSample, usize)> {
    let n = points.len();
    let width = 2 * config.half_width + 1;
    let mut last_error = None;
    for _ in 0..MAX_RETRIES {
        let ratio = draw(config.downsample_ratio, rng);
        let count = downsample_count(n, ratio);
        if count < width {
            return Err(Error::InvalidCurve(format!(
                "{n}-point curve keeps {count} points at ratio {ratio}, fewer than {width}"
            )));
        }
        let pmf = random_pmf(n, config.pmf_concentration, rng)?;
        let kept = downsample_indices(&pmf, count, center, rng)?;
        let position = match center {
            Some(c) => kept.binary_search(&c).expect("forced index survives"),
            None => rng.random_range(0..kept.len()),
        };
        let survivors: Vec<Point> = kept.iter().map(|&i| points[i]).collect();
        let window = extract_neighborhood(&survivors, position, config.half_width)?;
        let map = random_affine(draw(config.det, rng), draw(config.cond, rng), rng)?;
        match window.transformed(&map).canonicalize() {
            Ok(sample) => return Ok((sample, kept[position])),
            Err(e) => last_error = Some(e),
        }
    }
    Err(last_error.expect("at least one attempt"))
}

/// Anchor and positive share a curve point under independent downsampling and
/// group elements; each negative comes from an independently drawn curve
/// point.
pub fn sample_tuplet<R: Rng>(dataset: &CurveDataset, config: &TrainingConfig, rng: &mut R) -> Result<TrainingTuplet> {
    let curves = dataset.curves();
    if curves.len() * curves[0].len() < 2 {
        return Err(Error::InvalidArgument("dataset has a single point to sample".into()));
    }
    let curve = rng.random_range(0..curves.len());
    let point = rng.random_range(0..curves[curve].len());
    let anchor_source = SampleSource { curve, point };
    let pts = curves[curve].points();
    let (anchor, _) = sample_view(pts, Some(point), config, rng)?;
    let (positive, _) = sample_view(pts, Some(point), config, rng)?;
    let mut negatives = Vec::with_capacity(config.negatives);
    let mut negative_sources = Vec::with_capacity(config.negatives);
    while negatives.len() < config.negatives {
        let c = rng.random_range(0..curves.len());
        let (sample, p) = sample_view(curves[c].points(), None, config, rng)?;
        let source = SampleSource { curve: c, point: p };
        if source != anchor_source {
            negatives.push(sample);
            negative_sources.push(source);
        }
    }
    Ok(TrainingTuplet {
        anchor,
        positive,
        negatives,
        anchor_source,
        negative_sources,
    })
}

/// `K` tuplets, tuplet `k` drawn from its own stream `(seed, tags…, k)`.
pub fn sample_batch(
    dataset: &CurveDataset,
    config: &TrainingConfig,
    seed: u64,
    tags: &[u64],
) -> Result<Vec<TrainingTuplet>> {
    (0..config.batch_size)
        .into_par_iter()
        .map(|k| {
            let mut stream: Vec<u64> = tags.to_vec();
            stream.push(k as u64);
            sample_tuplet(dataset, config, &mut seeded(seed, &stream))
        })
        .collect()
}

/// Network inputs per slot: anchors, positives, then each negative slot, as
/// `K × 2(2N + 1)` matrices.
pub fn batch_inputs(tuplets: &[TrainingTuplet]) -> Vec<Array2<f64>> {
    let k = tuplets.len();
    let dim = 2 * tuplets[0].anchor.points().len();
    let m = tuplets[0].negatives.len();
    let mut slots = vec![Array2::zeros((k, dim)); m + 2];
    for (i, t) in tuplets.iter().enumerate() {
        let samples = std::iter::once(&t.anchor).chain(std::iter::once(&t.positive)).chain(&t.negatives);
        for (slot, sample) in slots.iter_mut().zip(samples) {
            sample.flatten_into(slot.row_mut(i).as_slice_mut().expect("standard layout"));
        }
    }
    slots
}
