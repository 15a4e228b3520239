use std::fs;
use std::path::{Path, PathBuf};

use invsig::datasets::{
    build_collection, load_collections, load_curves, save_collections, save_curves, CurveCollection, CurveDataset,
    GeneratorConfig, Split,
};
use invsig::matching::{run_benchmark, BenchmarkConfig, Flavor};
use invsig::nn::{load_checkpoint, save_checkpoint};
use invsig::rng::seeded;
use invsig::training::{pearson_experiment, train_with_progress, Estimator, TrainingConfig};
use invsig::{Error, Group, PlanarCurve, Result};
use rayon::prelude::*;
use serde_json::json;

use crate::output::{ensure_parent, manifest_path, sibling, write_csv, Run};
use crate::{BenchmarkArgs, EstimatorArgs, GenDataArgs, PearsonArgs, SignatureArgs, TrainArgs};

const TRAIN_STREAM: u64 = 1;
const VALIDATION_STREAM: u64 = 2;
const COLLECTION_STREAM: u64 = 3;

fn usage(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

fn generate_curves(gen: &GeneratorConfig, count: usize, seed: u64, stream: u64) -> Result<Vec<PlanarCurve>> {
    (0..count)
        .into_par_iter()
        .map(|i| gen.generate(&mut seeded(seed, &[stream, i as u64])))
        .collect()
}

pub fn gen_data(args: &GenDataArgs) -> Result<()> {
    let run = Run::start("gen-data");
    if args.curves == 0 || args.val_curves == 0 {
        return Err(usage("--curves and --val-curves must be >= 1"));
    }
    let (collections, members) = if args.full { (34, 30) } else { (args.collections, args.members) };
    if collections > 0 && members < 2 {
        return Err(usage("--members must be >= 2"));
    }
    if !(args.deform >= 0.0) {
        return Err(usage("--deform must be >= 0"));
    }
    let gen = GeneratorConfig {
        harmonics: args.harmonics,
        decay: args.decay,
        samples: args.samples,
        ..GeneratorConfig::default()
    };
    gen.validate()?;
    fs::create_dir_all(&args.out).map_err(|e| Error::Io {
        path: args.out.clone(),
        source: e,
    })?;

    let train = CurveDataset::new(generate_curves(&gen, args.curves, args.seed, TRAIN_STREAM)?, Split::Train)?;
    let val = CurveDataset::new(
        generate_curves(&gen, args.val_curves, args.seed, VALIDATION_STREAM)?,
        Split::Validation,
    )?;
    let train_path = args.out.join("train.json");
    let val_path = args.out.join("val.json");
    save_curves(&train, &train_path)?;
    save_curves(&val, &val_path)?;
    let mut outputs = vec![train_path, val_path];

    if collections > 0 {
        let built: Vec<CurveCollection> = (0..collections)
            .into_par_iter()
            .map(|c| {
                let mut rng = seeded(args.seed, &[COLLECTION_STREAM, c as u64]);
                let base = gen.generate(&mut rng)?;
                build_collection(format!("c{c:02}"), &base, members, args.deform, &mut rng)
            })
            .collect::<Result<_>>()?;
        let path = args.out.join("collections.json");
        save_collections(&built, &path)?;
        outputs.push(path);
    }
    let config = json!({
        "curves": args.curves,
        "val_curves": args.val_curves,
        "generator": gen,
        "collections": collections,
        "members": members,
        "deform": args.deform,
    });
    let out_refs: Vec<&Path> = outputs.iter().map(PathBuf::as_path).collect();
    run.finish(&args.out.join("manifest.json"), config, args.seed, &[], &out_refs)?;
    for p in &outputs {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

pub fn train(args: &TrainArgs) -> Result<()> {
    let run = Run::start("train");
    ensure_parent(&args.out_ckpt)?;
    let train_set = load_curves(&args.train)?;
    let val_set = load_curves(&args.val)?;
    let mut config = TrainingConfig::for_group(args.group).with_half_width(args.half_width);
    config.epochs = args.epochs;
    config.steps_per_epoch = args.steps;
    config.batch_size = args.batch;
    config.negatives = args.negatives;
    config.adam.lr = args.lr;
    config.seed = args.seed;
    if let Some(d) = args.lr_decay {
        config.lr_decay = d;
    }
    if let Some(c) = args.concentration {
        config.pmf_concentration = c;
    }
    if let Some(lo) = args.ratio_min {
        config.downsample_ratio.lo = lo;
    }
    let metrics_path = args.metrics.clone().unwrap_or_else(|| sibling(&args.out_ckpt, "metrics.csv"));
    ensure_parent(&metrics_path)?;

    let outcome = train_with_progress(&train_set, &val_set, &config, |m| {
        eprintln!(
            "epoch {:>3}  train {:.5}  val {:.5}  (invariance {:.5}, orthogonality {:.5})",
            m.epoch, m.train_loss, m.val_loss, m.val_invariance, m.val_orthogonality
        );
    })?;
    save_checkpoint(&outcome.best, &args.out_ckpt)?;
    write_csv(
        &metrics_path,
        &["epoch", "train_loss", "val_loss", "val_invariance", "val_orthogonality"],
        outcome.metrics.iter().map(|m| {
            vec![
                m.epoch.to_string(),
                m.train_loss.to_string(),
                m.val_loss.to_string(),
                m.val_invariance.to_string(),
                m.val_orthogonality.to_string(),
            ]
        }),
    )?;
    run.finish(
        &manifest_path(&args.out_ckpt),
        &config,
        args.seed,
        &[&args.train, &args.val],
        &[&args.out_ckpt, &metrics_path],
    )?;
    match outcome.aborted {
        Some(reason) => Err(Error::Numeric(format!(
            "training stopped early ({reason}); wrote the last good checkpoint from epoch {}",
            outcome.best.metadata.epoch
        ))),
        None => {
            eprintln!(
                "wrote {} (epoch {}) and {}",
                args.out_ckpt.display(),
                outcome.best.metadata.epoch,
                metrics_path.display()
            );
            Ok(())
        }
    }
}

fn load_estimator(args: &EstimatorArgs) -> Result<Estimator> {
    match (&args.ckpt, args.axiomatic) {
        (Some(path), _) => Estimator::model(load_checkpoint(path)?.model),
        (None, Some(Group::Affine)) => Err(usage("no axiomatic estimator for the affine group; use --ckpt")),
        (None, Some(g)) => Ok(Estimator::Axiomatic(g)),
        (None, None) => Err(usage("pass --ckpt or --axiomatic")),
    }
}

fn estimator_inputs(args: &EstimatorArgs) -> Vec<&Path> {
    args.ckpt.iter().map(PathBuf::as_path).collect()
}

fn estimator_config(args: &EstimatorArgs) -> serde_json::Value {
    json!({
        "ckpt": args.ckpt,
        "axiomatic": args.axiomatic,
    })
}

fn load_single_curve(path: &Path, index: usize) -> Result<PlanarCurve> {
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if !is_csv {
        let dataset = load_curves(path)?;
        let count = dataset.len();
        return dataset
            .curves()
            .get(index)
            .cloned()
            .ok_or_else(|| usage(format!("--index {index} out of range: {} holds {count} curves", path.display())));
    }
    let parse = |msg: String| Error::Parse {
        path: path.to_path_buf(),
        message: msg,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| parse(e.to_string()))?;
    let headers = reader.headers().map_err(|e| parse(e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| parse(format!("missing column {name:?}")))
    };
    let (xi, yi) = (col("x")?, col("y")?);
    let mut coords = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| parse(e.to_string()))?;
        let field = |i: usize| -> Result<f64> {
            record
                .get(i)
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| parse(format!("row {}: bad number", line + 1)))
        };
        coords.push([field(xi)?, field(yi)?]);
    }
    PlanarCurve::from_xy(&coords).map_err(|e| parse(e.to_string()))
}

pub fn signature(args: &SignatureArgs) -> Result<()> {
    let run = Run::start("signature");
    ensure_parent(&args.out)?;
    let estimator = load_estimator(&args.estimator)?;
    let curve = load_single_curve(&args.curve, args.index)?;
    let sig = estimator.signature(&curve)?;
    let rows = curve.points().iter().enumerate().map(|(i, p)| {
        let valid = sig.is_valid(i);
        let [k, ks] = sig.points()[i];
        let value = |v: f64| if valid { v.to_string() } else { String::new() };
        vec![
            i.to_string(),
            p.x.to_string(),
            p.y.to_string(),
            value(k),
            value(ks),
            u8::from(valid).to_string(),
        ]
    });
    write_csv(&args.out, &["index", "x", "y", "kappa", "kappa_s", "valid"], rows)?;
    let mut inputs = estimator_inputs(&args.estimator);
    inputs.push(&args.curve);
    let config = json!({
        "estimator": estimator_config(&args.estimator),
        "curve": args.curve,
        "index": args.index,
    });
    run.finish(&manifest_path(&args.out), config, 0, &inputs, &[&args.out])?;
    eprintln!(
        "wrote {} ({} of {} points valid)",
        args.out.display(),
        sig.valid_count(),
        sig.len()
    );
    Ok(())
}

fn parse_list<T>(text: &str, what: &str, item: impl Fn(&str) -> Option<T>) -> Result<Vec<T>> {
    let items: Option<Vec<T>> = text.split(',').map(|s| item(s.trim())).collect();
    match items {
        Some(v) if !v.is_empty() => Ok(v),
        _ => Err(usage(format!("cannot parse {what} {text:?}"))),
    }
}

fn parse_flavors(text: &str) -> Result<Vec<Flavor>> {
    parse_list(text, "flavors", |s| {
        let (det, cond) = s.split_once(':')?;
        Some(Flavor {
            det: det.trim().parse().ok()?,
            cond: cond.trim().parse().ok()?,
        })
    })
}

pub fn benchmark(args: &BenchmarkArgs) -> Result<()> {
    let run = Run::start("benchmark");
    ensure_parent(&args.out)?;
    let flavors = parse_flavors(&args.flavors)?;
    let rates = parse_list(&args.rates, "rates", |s| s.parse::<f64>().ok())?;
    let estimator = load_estimator(&args.estimator)?;
    let collections = load_collections(&args.collections)?;
    let mut config = BenchmarkConfig {
        flavors,
        sampling_rates: rates,
        seed: args.seed,
        ..BenchmarkConfig::default()
    };
    if let Some(c) = args.concentration {
        config.pmf_concentration = c;
    }
    let report = run_benchmark(&collections, &estimator, &config)?;

    write_csv(
        &args.out,
        &["collection", "flavor_det", "flavor_cond", "sampling_rate", "success_rate"],
        report.cells.iter().map(|c| {
            vec![
                c.collection.clone(),
                c.flavor.det.to_string(),
                c.flavor.cond.to_string(),
                c.sampling_rate.to_string(),
                c.success_rate().to_string(),
            ]
        }),
    )?;
    let queries_path = sibling(&args.out, "queries.csv");
    let opt = |v: Option<f64>| v.map(|d| d.to_string()).unwrap_or_default();
    write_csv(
        &queries_path,
        &[
            "collection",
            "flavor_det",
            "flavor_cond",
            "sampling_rate",
            "member",
            "best_match",
            "best_distance",
            "own_distance",
        ],
        report.cells.iter().flat_map(|c| {
            c.queries.iter().map(move |q| {
                vec![
                    c.collection.clone(),
                    c.flavor.det.to_string(),
                    c.flavor.cond.to_string(),
                    c.sampling_rate.to_string(),
                    q.member.to_string(),
                    q.best_match.map(|b| b.to_string()).unwrap_or_default(),
                    opt(q.best_distance),
                    opt(q.own_distance),
                ]
            })
        }),
    )?;
    let table = report.render_table();
    let table_path = sibling(&args.out, "txt");
    invsig::datasets::write_atomic(&table_path, table.as_bytes())?;
    let failures: usize = report.cells.iter().map(|c| c.failures()).sum();
    if failures > 0 {
        eprintln!("{failures} queries had no signature and count as misses");
    }
    let mut inputs = estimator_inputs(&args.estimator);
    inputs.push(&args.collections);
    let config_json = json!({
        "estimator": estimator_config(&args.estimator),
        "flavors": config.flavors.iter().map(|f| [f.det, f.cond]).collect::<Vec<_>>(),
        "rates": config.sampling_rates,
        "concentration": config.pmf_concentration,
    });
    run.finish(
        &manifest_path(&args.out),
        config_json,
        args.seed,
        &inputs,
        &[&args.out, &queries_path, &table_path],
    )?;
    print!("{table}");
    Ok(())
}

pub fn pearson(args: &PearsonArgs) -> Result<()> {
    let run = Run::start("pearson");
    ensure_parent(&args.out)?;
    let counts = parse_list(&args.counts, "counts", |s| s.parse::<usize>().ok())?;
    let estimator = load_estimator(&args.estimator)?;
    let curves = load_curves(&args.curves)?;
    let series = pearson_experiment(&estimator, curves.curves(), &counts, args.seed)?;
    write_csv(
        &args.out,
        &["count", "abs_rho"],
        series.iter().map(|p| vec![p.count.to_string(), p.abs_rho.to_string()]),
    )?;
    let mut inputs = estimator_inputs(&args.estimator);
    inputs.push(&args.curves);
    let config = json!({
        "estimator": estimator_config(&args.estimator),
        "counts": counts,
    });
    run.finish(&manifest_path(&args.out), config, args.seed, &inputs, &[&args.out])?;
    for p in &series {
        eprintln!("M = {:>7}  |rho| = {:.5}", p.count, p.abs_rho);
    }
    Ok(())
}
