use std::fmt::Write as _;
use std::path::Path;

use krylov_rmt::ensembles::{make_rhs, sample_data_matrix, BetaField, EnsembleKind, Rhs, RngStream};
use krylov_rmt::harness::{emit, oracle_check, run_experiment, write_csv, write_json, ExperimentConfig, OutputFormat, RhsKind};
use krylov_rmt::linalg::{DenseCholesky, GramOperator};
use krylov_rmt::solvers::{cg_normal_equations, cg_solve, minres_solve};
use krylov_rmt::theory::{fluctuation_variance, halting_prediction, leading_order, predicted_rescaled_variance, table1_prediction, Algorithm};
use krylov_rmt::{Complex64, Error, Scalar};

use crate::args::{PredictArgs, RunArgs};
use crate::CliError;

/// Oracle agreement required by `verify`.
const VERIFY_BOUND: f64 = 1e-6;

fn echo(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let json = serde_json::to_string(cfg).map_err(Error::from)?;
    eprintln!("# config {json}");
    Ok(json)
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::from(e).into()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn rhs_of<S>(kind: RhsKind) -> Rhs<S> {
    match kind {
        RhsKind::FirstBasis => Rhs::FirstBasis,
        RhsKind::RandomUnit => Rhs::RandomUnit,
    }
}

fn solve_instance<S: Scalar<Real = f64>>(cfg: &ExperimentConfig) -> krylov_rmt::Result<Vec<Vec<f64>>> {
    let spec = &cfg.ensemble;
    let mut rng = RngStream::new(cfg.seed, 0);
    let x = sample_data_matrix::<S>(spec, &mut rng)?;
    let b = make_rhs::<S>(&rhs_of(cfg.rhs), spec.n, &mut rng)?;
    let w = GramOperator::sample_covariance(&x);
    let (kmax, tol) = match cfg.eps {
        Some(eps) => (spec.n, eps),
        None => (cfg.kmax, 0.0),
    };
    let x_true = if cfg.algorithms.contains(&Algorithm::CgError) {
        Some(DenseCholesky::factor(&x.gram(1.0))?.solve(&b))
    } else {
        None
    };
    let cg = cg_solve(&w, &b, kmax, tol, x_true.as_deref())?;
    let mut out = Vec::new();
    for alg in &cfg.algorithms {
        let sq = match alg {
            Algorithm::CgResidual => cg.r2sq.clone(),
            Algorithm::CgError => cg.ewsq.clone().unwrap_or_default(),
            Algorithm::MinresResidual => minres_solve(&w, &b, kmax, tol)?.r2sq,
            Algorithm::CgneRelative => {
                let b_m = make_rhs::<S>(&rhs_of(cfg.rhs), spec.m, &mut rng)?;
                cg_normal_equations(&x, &b_m, kmax, tol)?.relative_ewsq().unwrap_or_default()
            }
        };
        out.push(sq.into_iter().map(f64::sqrt).collect());
    }
    Ok(out)
}

pub fn solve(args: RunArgs) -> Result<(), CliError> {
    let mut cfg = args.experiment(args.single_ensemble()?, args.algorithms(&[Algorithm::CgResidual, Algorithm::MinresResidual]), 10, 1)?;
    cfg.trials = 1;
    cfg.validate()?;
    let json = echo(&cfg)?;
    let traces = if cfg.ensemble.beta == BetaField::REAL {
        solve_instance::<f64>(&cfg)?
    } else {
        solve_instance::<Complex64>(&cfg)?
    };
    let text = match args.format() {
        OutputFormat::Csv => {
            let mut s = format!("# config {json}\nalgorithm,k,norm\n");
            for (alg, tr) in cfg.algorithms.iter().zip(&traces) {
                for (k, v) in tr.iter().enumerate() {
                    writeln!(s, "{alg},{k},{v:.16e}").unwrap();
                }
            }
            s
        }
        OutputFormat::Json => {
            let norms: serde_json::Map<String, serde_json::Value> =
                cfg.algorithms.iter().zip(&traces).map(|(a, t)| (a.to_string(), serde_json::json!(t))).collect();
            format!("{:#}\n", serde_json::json!({ "config": cfg, "norms": norms }))
        }
    };
    write_text(args.out.as_deref(), &text)
}

pub fn sample(args: RunArgs) -> Result<(), CliError> {
    let mut cfg = args.experiment(args.single_ensemble()?, args.algorithms(&[Algorithm::CgResidual]), 10, 1000)?;
    cfg.keep_traces = true;
    let json = echo(&cfg)?;
    let table = run_experiment(&cfg)?;
    let traces = table.traces.unwrap_or_default();
    let text = match args.format() {
        OutputFormat::Csv => {
            let mut s = format!("# config {json}\ntrial,algorithm,k,value\n");
            for (t, tr) in traces.iter().enumerate() {
                for (alg, stats) in cfg.algorithms.iter().zip(&tr.stats) {
                    for (k, v) in stats.iter().enumerate() {
                        writeln!(s, "{t},{alg},{k},{v:.16e}").unwrap();
                    }
                }
            }
            s
        }
        OutputFormat::Json => {
            let samples: Vec<&Vec<Vec<f64>>> = traces.iter().map(|t| &t.stats).collect();
            format!("{:#}\n", serde_json::json!({ "config": cfg, "samples": samples }))
        }
    };
    write_text(args.out.as_deref(), &text)
}

pub fn verify(args: RunArgs) -> Result<(), CliError> {
    let instances = args.trials.unwrap_or(10);
    let seed = args.seed.unwrap_or(1);
    let mut worst = 0.0f64;
    let mut header = String::new();
    let mut lines = String::from("ensemble,n,m,seed,cg_residual,cg_error,minres_residual\n");
    for kind in args.ensembles() {
        let cfg = args.experiment(kind, vec![Algorithm::CgResidual, Algorithm::CgError, Algorithm::MinresResidual], 0, instances)?;
        let json = echo(&cfg)?;
        writeln!(header, "# config {json}").unwrap();
        for i in 0..instances as u64 {
            let s = seed.wrapping_add(i);
            let r = oracle_check(&cfg.ensemble, cfg.rhs, s, VERIFY_BOUND)?;
            worst = worst.max(r.max_rel());
            writeln!(
                lines,
                "{},{},{},{s},{:.3e},{:.3e},{:.3e}",
                kind.name(),
                r.n,
                r.m,
                r.max_rel_cg_residual,
                r.max_rel_cg_error,
                r.max_rel_minres_residual
            )
            .unwrap();
        }
    }
    match &args.out {
        Some(p) => write_text(Some(p), &(header + &lines))?,
        None => print!("{lines}"),
    }
    println!("max relative error {worst:.3e}");
    if worst < VERIFY_BOUND {
        Ok(())
    } else {
        Err(CliError::runtime(format!("formula error {worst:.3e} exceeds {VERIFY_BOUND:e}")))
    }
}

fn write_tables(args: &RunArgs, tables: &[krylov_rmt::harness::SummaryTable]) -> Result<(), CliError> {
    let Some(path) = &args.out else { return Ok(()) };
    if let [one] = tables {
        return Ok(emit(one, args.format(), path)?);
    }
    let mut buf = Vec::new();
    match args.format() {
        OutputFormat::Csv => {
            for t in tables {
                write_csv(t, &mut buf)?;
            }
        }
        OutputFormat::Json => {
            buf.extend_from_slice(b"[\n");
            for (i, t) in tables.iter().enumerate() {
                if i > 0 {
                    buf.extend_from_slice(b",\n");
                }
                write_json(t, &mut buf)?;
            }
            buf.extend_from_slice(b"]\n");
        }
    }
    std::fs::write(path, buf).map_err(Error::from)?;
    Ok(())
}

pub fn table1(args: RunArgs) -> Result<(), CliError> {
    let kinds = match &args.ensemble {
        Some(_) => args.ensembles(),
        None => vec![EnsembleKind::Gaussian, EnsembleKind::MomentMatch4, EnsembleKind::Bernoulli],
    };
    let mut tables = Vec::new();
    for kind in &kinds {
        let cfg = args.experiment(*kind, vec![Algorithm::CgResidual], 6, 1000)?;
        echo(&cfg)?;
        tables.push(run_experiment(&cfg)?);
    }
    let cfg = tables[0].config.clone().expect("config is recorded");
    let d = cfg.ensemble.ratio();
    let mut out = format!("{:>3} {:>12}", "k", "k/2(1+1/d)");
    for kind in &kinds {
        write!(out, " {:>14}", kind.name()).unwrap();
    }
    println!("{out}");
    for k in 1..=cfg.kmax {
        let mut line = format!("{k:>3} {:>12.4}", table1_prediction(d, k)?);
        for t in &tables {
            let v = t.row(Algorithm::CgResidual, k).map_or(f64::NAN, |r| r.rescaled_var);
            write!(line, " {v:>14.4}").unwrap();
        }
        println!("{line}");
    }
    write_tables(&args, &tables)
}

pub fn halting(args: RunArgs) -> Result<(), CliError> {
    let mut cfg = args.experiment(args.single_ensemble()?, args.algorithms(&[Algorithm::CgResidual]), 10, 1000)?;
    cfg.eps = Some(args.eps.unwrap_or(1e-3));
    cfg.validate()?;
    echo(&cfg)?;
    let table = run_experiment(&cfg)?;
    let (d, eps) = (cfg.ensemble.ratio(), cfg.eps.unwrap_or_default());
    for &alg in &cfg.algorithms {
        match halting_prediction(alg, d, eps) {
            Ok(p) => println!("{alg}: predicted {}{}", p.iterations, if p.boundary { " (boundary)" } else { "" }),
            Err(e) => println!("{alg}: no prediction ({e})"),
        }
        for (k, count) in table.halting_histogram(alg) {
            let k = k.map_or_else(|| "none".to_string(), |k| k.to_string());
            println!("  {k:>5} {count:>8} {:.4}", count as f64 / cfg.trials as f64);
        }
    }
    write_tables(&args, std::slice::from_ref(&table))
}

pub fn predict(args: PredictArgs) -> Result<(), CliError> {
    let alg: Algorithm = args.alg.into();
    let beta = BetaField::new(args.beta)?;
    eprintln!("# predict alg={alg} d={} beta={} eps={:?} k={:?} kmax={:?}", args.d, args.beta, args.eps, args.k, args.kmax);
    if let Some(eps) = args.eps {
        let p = halting_prediction(alg, args.d, eps)?;
        println!("{}", p.iterations);
        if p.boundary {
            eprintln!("tolerance lies on the lattice; halting splits between {} and {}", p.iterations, p.iterations + 1);
        }
    }
    let ks: Vec<usize> = match (args.k, args.kmax) {
        (Some(k), _) => vec![k],
        (None, Some(kmax)) => (0..=kmax).collect(),
        (None, None) if args.eps.is_none() => (0..=10).collect(),
        _ => Vec::new(),
    };
    if !ks.is_empty() {
        println!("k,leading_order,fluctuation_variance,rescaled_variance");
    }
    for k in ks {
        println!(
            "{k},{:.10e},{:.10e},{:.10e}",
            leading_order(alg, args.d, k)?,
            fluctuation_variance(alg, args.d, k)?,
            predicted_rescaled_variance(alg, beta, args.d, k, false)?
        );
    }
    Ok(())
}
