use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use pdsvm::anneal::{AccelPolicy, AnnealSchedule, FitReport};
use pdsvm::simdata::{self, Sidecar, SimFamily, SimSpec, SpiralParams};
use pdsvm::{
    apply_transform, cross_validate, load_csv, load_csv_with_classes, make_stratified_folds, read_table, train_ovo,
    train_test_split, write_csv, CvOptions, Dataset, FitConfig, KernelSpec, OvoModel, SolverConfig, SparsityLevel,
    TrainedModel,
};
use serde::Serialize;

use crate::{Cli, Command, CvArgs, DataArgs, FitArgs, Format, GenArgs, PredictArgs, TraceArgs, TrainArgs};

pub fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    }
    match cli.command {
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Cv(a) => cv(a),
        Command::Gen(a) => gen(a),
        Command::Trace(a) => trace(a),
    }
}

fn fit_config(f: &FitArgs) -> FitConfig {
    FitConfig {
        solver: SolverConfig {
            kind: f.algorithm,
            grad_tol: f.eps,
            max_inner: f.inner,
            accel: (!f.no_accel).then(AccelPolicy::default),
            ..SolverConfig::default()
        },
        schedule: AnnealSchedule { rho0: f.rho0, multiplier: f.multiplier, max_outer: f.outer, dist_tol: f.dist_tol },
    }
}

fn kernel_spec(f: &FitArgs) -> Option<KernelSpec> {
    f.kernel.map(|_| KernelSpec { gamma: f.gamma })
}

fn sparsity_level(f: &FitArgs) -> Result<SparsityLevel> {
    if let Some(k) = f.k {
        if f.kernel.is_some() {
            bail!(
                "--k counts feature coefficients, but a kernel model has one coefficient per training sample; \
                 use --sparsity to set the fraction of samples dropped"
            );
        }
        return Ok(SparsityLevel::Count(k));
    }
    let s = f.sparsity.unwrap_or(0.0);
    if !(0.0..1.0).contains(&s) {
        bail!("--sparsity must lie in [0, 1), got {s}");
    }
    Ok(SparsityLevel::Fraction(s))
}

fn load(d: &DataArgs) -> Result<Dataset> {
    load_csv(&d.data, &d.label_column, !d.no_header).with_context(|| format!("reading {}", d.data.display()))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(v) if v.is_finite() => v.to_string(),
        _ => "NA".into(),
    }
}

#[derive(Serialize)]
struct PairReport {
    positive: String,
    negative: String,
    outer_iters: usize,
    inner_iters: usize,
    objective: f64,
    grad_sq: f64,
    distance: f64,
    sv: usize,
    nonzero: usize,
    converged: bool,
    capped_subproblems: usize,
    time: Option<f64>,
}

fn pair_reports(model: &OvoModel, reports: &[FitReport], record_time: bool) -> Vec<PairReport> {
    model
        .pairs
        .iter()
        .zip(reports)
        .map(|(c, r)| PairReport {
            positive: model.class_names[c.positive].clone(),
            negative: model.class_names[c.negative].clone(),
            outer_iters: r.outer_iters,
            inner_iters: r.total_inner_iters,
            objective: r.objective,
            grad_sq: r.grad_sq,
            distance: r.distance,
            sv: r.sv_count,
            nonzero: {
                let b = c.model.coefficients();
                b.rows(0, b.len() - 1).iter().filter(|v| **v != 0.0).count()
            },
            converged: r.converged,
            capped_subproblems: r.capped_subproblems,
            time: record_time.then_some(r.wall_time),
        })
        .collect()
}

fn train(a: TrainArgs) -> Result<()> {
    let level = sparsity_level(&a.fit)?;
    let cfg = fit_config(&a.fit);
    let raw = load(&a.data)?;
    let ds = apply_transform(&raw, a.fit.transform)?;
    let (ovo, reports) = train_ovo(&ds, level, &cfg, kernel_spec(&a.fit))?;
    let rows = pair_reports(&ovo, &reports, a.record_time);
    TrainedModel::new(ovo, ds.transform().clone())
        .save(&a.out)
        .with_context(|| format!("writing {}", a.out.display()))?;

    for r in rows.iter().filter(|r| !r.converged) {
        eprintln!(
            "note: pair {} vs {} stopped at distance {:.3e} without reaching the tolerance",
            r.positive, r.negative, r.distance
        );
    }
    let mut out = output(None)?;
    match a.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, &rows)?;
            writeln!(out)?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record([
                "positive",
                "negative",
                "outer_iters",
                "inner_iters",
                "objective",
                "grad_sq",
                "distance",
                "sv",
                "nonzero",
                "converged",
                "capped_subproblems",
                "time",
            ])?;
            for r in &rows {
                w.write_record([
                    r.positive.clone(),
                    r.negative.clone(),
                    r.outer_iters.to_string(),
                    r.inner_iters.to_string(),
                    r.objective.to_string(),
                    r.grad_sq.to_string(),
                    r.distance.to_string(),
                    r.sv.to_string(),
                    r.nonzero.to_string(),
                    r.converged.to_string(),
                    r.capped_subproblems.to_string(),
                    fmt_opt(r.time),
                ])?;
            }
            w.flush()?;
        }
    }
    out.flush()?;
    Ok(())
}

fn predict(a: PredictArgs) -> Result<()> {
    let model = TrainedModel::load(&a.model).with_context(|| format!("loading {}", a.model.display()))?;
    let file = File::open(&a.data).with_context(|| format!("opening {}", a.data.display()))?;
    let table = read_table(file, a.label_column.as_ref(), !a.no_header)
        .with_context(|| format!("reading {}", a.data.display()))?;
    let pred = model.predict(&table.features)?;

    let mut out = output(a.out.as_deref())?;
    let mut w = csv::Writer::from_writer(&mut out);
    w.write_record(["row", "prediction"])?;
    for (i, &c) in pred.iter().enumerate() {
        w.write_record([i.to_string(), model.class_name(c).to_string()])?;
    }
    w.flush()?;
    drop(w);
    out.flush()?;

    if let Some(labels) = &table.labels {
        let right = pred.iter().zip(labels).filter(|(&c, l)| model.class_name(c) == l.as_str()).count();
        eprintln!("accuracy: {:.4}% ({right}/{} rows)", 100.0 * right as f64 / labels.len() as f64, labels.len());
    }
    Ok(())
}

fn cv(a: CvArgs) -> Result<()> {
    if a.fit.k.is_some() || a.fit.sparsity.is_some() {
        bail!("cv scans the sparsity levels given by --grid; --k and --sparsity do not apply");
    }
    let full = load(&a.data)?;
    let (train, test) = match &a.test_data {
        Some(path) => {
            let test = load_csv_with_classes(path, &a.data.label_column, !a.data.no_header, full.class_names())
                .with_context(|| format!("reading {}", path.display()))?;
            if test.p() != full.p() {
                bail!("test data has {} features, training data has {}", test.p(), full.p());
            }
            (full, test)
        }
        None => {
            if !(a.test_fraction > 0.0 && a.test_fraction < 1.0) {
                bail!("--test-fraction must lie in (0, 1), got {}", a.test_fraction);
            }
            let (tr, te) = train_test_split(full.labels(), a.test_fraction, a.seed)?;
            (full.subset(&tr), full.subset(&te))
        }
    };
    let folds = make_stratified_folds(train.labels(), a.folds, a.seed)?;
    let opts = CvOptions {
        grid: a.grid.clone(),
        fit: fit_config(&a.fit),
        kernel: kernel_spec(&a.fit),
        transform: a.fit.transform,
        record_time: a.record_time,
    };
    let table = cross_validate(&train, Some(&test), &folds, &opts)?;

    if let Some(sel) = &table.selection {
        eprintln!("selected s = {} (valid {:.3}%, test {})", sel.s, sel.valid, fmt_opt(sel.test));
    }
    let mut out = output(a.out.as_deref())?;
    match a.format {
        Format::Csv => table.write_csv(&mut out)?,
        Format::Json => {
            table.write_json(&mut out)?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn gen(a: GenArgs) -> Result<()> {
    let sidecar_path = a.out.with_extension("json");
    if sidecar_path == a.out {
        bail!("--out must not have a .json extension; the sidecar is written there");
    }
    if a.counts.len() != 3 || a.sigmas.len() != 3 {
        bail!("--counts and --sigmas take exactly three comma-separated values");
    }
    let spiral = matches!(a.family, SimFamily::Spiral).then(|| SpiralParams {
        counts: [a.counts[0], a.counts[1], a.counts[2]],
        sigmas: [a.sigmas[0], a.sigmas[1], a.sigmas[2]],
    });
    let spec = SimSpec { family: a.family, n: a.n, p: a.p, k0: a.k0, seed: a.seed, spiral };
    let (ds, planted) = simdata::generate(&spec)?;

    let mut w = output(Some(&a.out))?;
    write_csv(&ds, &mut w)?;
    w.flush()?;
    let mut w = output(Some(&sidecar_path))?;
    Sidecar { spec, rng: simdata::RNG_NAME.into(), planted }.write(&mut w)?;
    writeln!(w)?;
    w.flush()?;
    eprintln!("wrote {} rows x {} features to {} and {}", ds.n(), ds.p(), a.out.display(), sidecar_path.display());
    Ok(())
}

#[derive(Serialize)]
struct PairTraceRow<'a> {
    positive: &'a str,
    negative: &'a str,
    outer: usize,
    rho: f64,
    inner_iters: usize,
    objective: f64,
    grad_sq: f64,
    distance: f64,
    train_accuracy: f64,
}

fn trace(a: TraceArgs) -> Result<()> {
    let level = sparsity_level(&a.fit)?;
    let cfg = fit_config(&a.fit);
    let ds = apply_transform(&load(&a.data)?, a.fit.transform)?;
    let (ovo, reports) = train_ovo(&ds, level, &cfg, kernel_spec(&a.fit))?;

    let mut out = output(a.out.as_deref())?;
    let mut w = csv::Writer::from_writer(&mut out);
    for (c, r) in ovo.pairs.iter().zip(&reports) {
        for t in &r.trace {
            w.serialize(PairTraceRow {
                positive: &ovo.class_names[c.positive],
                negative: &ovo.class_names[c.negative],
                outer: t.outer,
                rho: t.rho,
                inner_iters: t.inner_iters,
                objective: t.objective,
                grad_sq: t.grad_sq,
                distance: t.distance,
                train_accuracy: t.train_accuracy,
            })?;
        }
    }
    w.flush()?;
    drop(w);
    out.flush()?;
    Ok(())
}
