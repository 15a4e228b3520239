//! Signature distances and the shape-matching benchmark.
//!
//! Each member of a collection is transformed by a random affine map of a
//! given determinant and condition number, non-uniformly downsampled, and
//! matched against the signatures of all original members of its collection.
//! The match succeeds when the nearest signature is the member's own.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::datasets::CurveCollection;
use crate::error::{Error, Result};
use crate::geometry::{apply_affine, downsample, random_affine, random_pmf};
use crate::rng::seeded;
use crate::signature::SignatureCurve;
use crate::training::Estimator;

/// Symmetric mean of directed mean nearest-neighbour distances over valid
/// points.
pub fn avg_hausdorff(a: &SignatureCurve, b: &SignatureCurve) -> Result<f64> {
    let pa: Vec<[f64; 2]> = a.valid_points().collect();
    let pb: Vec<[f64; 2]> = b.valid_points().collect();
    if pa.is_empty() || pb.is_empty() {
        return Err(Error::Degenerate("signature without valid points".into()));
    }
    Ok(0.5 * (directed_mean(&pa, &pb) + directed_mean(&pb, &pa)))
}

fn directed_mean(from: &[[f64; 2]], to: &[[f64; 2]]) -> f64 {
    let total: f64 = from
        .iter()
        .map(|p| {
            to.iter()
                .map(|q| (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2))
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .sum();
    total / from.len() as f64
}

/// Index of the nearest database signature (lowest index on ties) and all
/// distances.
pub fn match_query(query: &SignatureCurve, database: &[SignatureCurve]) -> Result<(usize, Vec<f64>)> {
    if database.is_empty() {
        return Err(Error::InvalidArgument("empty database".into()));
    }
    let distances = database.iter().map(|s| avg_hausdorff(query, s)).collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (i, d) in distances.iter().enumerate() {
        if *d < distances[best] {
            best = i;
        }
    }
    Ok((best, distances))
}

/// Determinant and condition number of the query transforms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flavor {
    pub det: f64,
    pub cond: f64,
}

pub const DEFAULT_FLAVORS: [Flavor; 3] = [
    Flavor { det: 2.0, cond: 2.0 },
    Flavor { det: 2.0, cond: 3.0 },
    Flavor { det: 3.0, cond: 2.0 },
];

pub const DEFAULT_RATES: [f64; 6] = [1.0, 0.9, 0.8, 0.7, 0.6, 0.5];

#[derive(Debug, Clone)]
pub struct BenchmarkConfig {
    pub flavors: Vec<Flavor>,
    pub sampling_rates: Vec<f64>,
    pub pmf_concentration: f64,
    pub seed: u64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            flavors: DEFAULT_FLAVORS.to_vec(),
            sampling_rates: DEFAULT_RATES.to_vec(),
            pmf_concentration: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryResult {
    pub member: usize,
    /// `None` when the estimator failed on the query.
    pub best_match: Option<usize>,
    pub best_distance: Option<f64>,
    pub own_distance: Option<f64>,
}

impl QueryResult {
    pub fn success(&self) -> bool {
        self.best_match == Some(self.member)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkCell {
    pub collection: String,
    pub flavor: Flavor,
    pub sampling_rate: f64,
    pub queries: Vec<QueryResult>,
}

impl BenchmarkCell {
    pub fn success_rate(&self) -> f64 {
        self.queries.iter().filter(|q| q.success()).count() as f64 / self.queries.len() as f64
    }

    pub fn failures(&self) -> usize {
        self.queries.iter().filter(|q| q.best_match.is_none()).count()
    }
}

/// Cells in collection-major, then flavor, then rate order.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkReport {
    pub estimator: String,
    pub flavors: Vec<Flavor>,
    pub sampling_rates: Vec<f64>,
    pub cells: Vec<BenchmarkCell>,
}

impl BenchmarkReport {
    /// Success rate per (flavor, rate) averaged over collections.
    pub fn mean_success(&self, flavor: usize, rate: usize) -> f64 {
        let per_collection = self.flavors.len() * self.sampling_rates.len();
        let idx = flavor * self.sampling_rates.len() + rate;
        let rates: Vec<f64> = self
            .cells
            .chunks(per_collection)
            .map(|c| c[idx].success_rate())
            .collect();
        rates.iter().sum::<f64>() / rates.len() as f64
    }

    /// Rows are flavors, columns sampling rates, entries the success rate
    /// averaged over collections in percent.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "Shape matching success rate, {} ({} collections)", self.estimator, self.cells.len() / (self.flavors.len() * self.sampling_rates.len()).max(1));
        let _ = write!(out, "{:<18}", "det / cond");
        for r in &self.sampling_rates {
            let _ = write!(out, "{:>9}", format!("{:.0}%", r * 100.0));
        }
        out.push('\n');
        for (f, flavor) in self.flavors.iter().enumerate() {
            let _ = write!(out, "{:<18}", format!("{} / {}", flavor.det, flavor.cond));
            for r in 0..self.sampling_rates.len() {
                let _ = write!(out, "{:>9.2}", 100.0 * self.mean_success(f, r));
            }
            out.push('\n');
        }
        out
    }
}

/// Runs every (collection, flavor, rate, member) query. Query `j` uses the
/// stream `(seed, collection, flavor, rate, j)`, so results do not depend on
/// scheduling.
pub fn run_benchmark(collections: &[CurveCollection], estimator: &Estimator, config: &BenchmarkConfig) -> Result<BenchmarkReport> {
    if config.flavors.is_empty() || config.sampling_rates.is_empty() {
        return Err(Error::InvalidArgument("need at least one flavor and one sampling rate".into()));
    }
    for f in &config.flavors {
        if !(f.det > 0.0 && f.cond >= 1.0 && f.det.is_finite() && f.cond.is_finite()) {
            return Err(Error::InvalidArgument(format!("invalid flavor det={} cond={}", f.det, f.cond)));
        }
    }
    if let Some(r) = config.sampling_rates.iter().find(|&&r| !(r > 0.0 && r <= 1.0)) {
        return Err(Error::InvalidArgument(format!("sampling rate {r} outside (0, 1]")));
    }
    let databases: Vec<Vec<SignatureCurve>> = collections
        .par_iter()
        .map(|c| c.members().iter().map(|m| estimator.signature(m)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;

    let mut jobs = Vec::new();
    for ci in 0..collections.len() {
        for fi in 0..config.flavors.len() {
            for ri in 0..config.sampling_rates.len() {
                jobs.push((ci, fi, ri));
            }
        }
    }
    let cells = jobs
        .par_iter()
        .map(|&(ci, fi, ri)| {
            let collection = &collections[ci];
            let flavor = config.flavors[fi];
            let rate = config.sampling_rates[ri];
            let queries = (0..collection.members().len())
                .map(|j| {
                    let mut rng = seeded(config.seed, &[ci as u64, fi as u64, ri as u64, j as u64]);
                    let member = &collection.members()[j];
                    let query = random_affine(flavor.det, flavor.cond, &mut rng)
                        .and_then(|map| apply_affine(member, &map))
                        .and_then(|moved| {
                            let pmf = random_pmf(moved.len(), config.pmf_concentration, &mut rng)?;
                            downsample(&moved, &pmf, rate, &mut rng)
                        })?;
                    // An estimator failure on the query is a miss, not an error.
                    let result = estimator
                        .signature(&query)
                        .and_then(|sig| match_query(&sig, &databases[ci]));
                    Ok(match result {
                        Ok((best, distances)) => QueryResult {
                            member: j,
                            best_match: Some(best),
                            best_distance: Some(distances[best]),
                            own_distance: Some(distances[j]),
                        },
                        Err(_) => QueryResult {
                            member: j,
                            best_match: None,
                            best_distance: None,
                            own_distance: None,
                        },
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(BenchmarkCell {
                collection: collection.name().to_string(),
                flavor,
                sampling_rate: rate,
                queries,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BenchmarkReport {
        estimator: estimator.name(),
        flavors: config.flavors.clone(),
        sampling_rates: config.sampling_rates.clone(),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{build_collection, GeneratorConfig};
    use crate::signature::Group;

    fn sig(points: &[[f64; 2]]) -> SignatureCurve {
        SignatureCurve::from_points(points.to_vec()).unwrap()
    }

    #[test]
    fn hausdorff_reference_values() {
        let a = sig(&[[0.0, 0.0]]);
        let b = sig(&[[3.0, 4.0]]);
        assert_eq!(avg_hausdorff(&a, &b).unwrap(), 5.0);
        let c = sig(&[[0.0, 0.0], [1.0, 0.0], [5.0, 5.0]]);
        assert_eq!(avg_hausdorff(&c, &c).unwrap(), 0.0);
        // a→c: 0; c→a: (0 + 1 + √50)/3.
        let expected = 0.5 * (1.0 + 50f64.sqrt()) / 3.0;
        assert!((avg_hausdorff(&a, &c).unwrap() - expected).abs() < 1e-15);
        assert_eq!(avg_hausdorff(&a, &c).unwrap(), avg_hausdorff(&c, &a).unwrap());
    }

    #[test]
    fn invalid_points_are_ignored() {
        let a = SignatureCurve::from_estimates(vec![Some([0.0, 0.0]), None, Some([1.0, 0.0])]);
        let b = sig(&[[0.0, 0.0], [1.0, 0.0]]);
        assert_eq!(avg_hausdorff(&a, &b).unwrap(), 0.0);
        let empty = SignatureCurve::from_estimates(vec![None, None]);
        assert!(avg_hausdorff(&empty, &b).is_err());
    }

    #[test]
    fn match_query_prefers_self_and_lowest_index() {
        let db = vec![sig(&[[0.0, 0.0]]), sig(&[[1.0, 1.0]]), sig(&[[1.0, 1.0]])];
        assert_eq!(match_query(&db[1], &db).unwrap().0, 1);
        assert_eq!(match_query(&db[2], &db).unwrap().0, 1);
        assert_eq!(match_query(&sig(&[[9.0, 9.0]]), &db[..1]).unwrap().0, 0);
        let permuted = vec![db[1].clone(), db[0].clone()];
        assert_eq!(match_query(&db[0], &permuted).unwrap().0, 1);
    }

    fn collections(count: usize, members: usize) -> Vec<CurveCollection> {
        let mut rng = seeded(8, &[]);
        let gen = GeneratorConfig { samples: 128, ..GeneratorConfig::default() };
        (0..count)
            .map(|i| {
                let base = gen.generate(&mut rng).unwrap();
                build_collection(format!("c{i}"), &base, members, 0.05, &mut rng).unwrap()
            })
            .collect()
    }

    #[test]
    fn rigid_full_rate_queries_all_succeed() {
        let config = BenchmarkConfig {
            flavors: vec![Flavor { det: 1.0, cond: 1.0 }],
            sampling_rates: vec![1.0],
            ..BenchmarkConfig::default()
        };
        let report = run_benchmark(&collections(2, 4), &Estimator::Axiomatic(Group::Euclidean), &config).unwrap();
        assert_eq!(report.cells.len(), 2);
        for cell in &report.cells {
            assert_eq!(cell.success_rate(), 1.0);
        }
    }

    #[test]
    fn report_grid_and_determinism() {
        let cols = collections(2, 3);
        let config = BenchmarkConfig {
            sampling_rates: vec![1.0, 0.5],
            seed: 4,
            ..BenchmarkConfig::default()
        };
        let est = Estimator::Axiomatic(Group::Equiaffine);
        let a = run_benchmark(&cols, &est, &config).unwrap();
        let b = run_benchmark(&cols, &est, &config).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.cells.len(), 2 * 3 * 2);
        for cell in &a.cells {
            assert!((0.0..=1.0).contains(&cell.success_rate()));
            assert_eq!(cell.queries.len(), 3);
        }
        let table = a.render_table();
        assert_eq!(table.lines().count(), 2 + 3);
        assert!(run_benchmark(&cols, &est, &BenchmarkConfig { sampling_rates: vec![1.5], ..config }).is_err());
    }
}
