//! Monte Carlo experiment driver: trials over an ensemble, summary statistics
//! against the large-`M` predictions, halting histograms.

mod emit;
mod oracle;
mod stats;

pub use emit::{emit, parse_csv, write_csv, write_json, OutputFormat};
pub use oracle::{oracle_check, OracleReport};
pub use stats::{
    gaussianity_check, ks_against, mean_var, rescaled, two_sample_ks, GaussianityReport, Rescale,
    MIN_GAUSSIANITY_SAMPLES,
};

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chimodel::ChiPath;
use crate::ensembles::{fill_data_matrix, make_rhs, BetaField, EnsembleKind, EnsembleSpec, Rhs, RngStream};
use crate::error::{Error, Result};
use crate::linalg::{DenseCholesky, GramOperator, Matrix};
use crate::scalar::Scalar;
use crate::solvers::{cg_core, minres_core};
use crate::theory::{halting_prediction, leading_order, predicted_rescaled_variance, Algorithm};

/// Default cap on the estimated floating-point work of one experiment.
pub const DEFAULT_BUDGET_FLOPS: f64 = 2e13;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Sample the data matrix and run the solvers.
    #[default]
    Full,
    /// Sample the statistics directly from the chi model (Gaussian entries only).
    Chi,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhsKind {
    #[default]
    FirstBasis,
    RandomUnit,
}

impl RhsKind {
    fn rhs<S>(self) -> Rhs<S> {
        match self {
            RhsKind::FirstBasis => Rhs::FirstBasis,
            RhsKind::RandomUnit => Rhs::RandomUnit,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub ensemble: EnsembleSpec,
    pub rhs: RhsKind,
    pub algorithms: Vec<Algorithm>,
    pub kmax: usize,
    pub trials: usize,
    pub seed: u64,
    /// Halting tolerance; when set, each trial runs until every statistic has
    /// dropped below it.
    pub eps: Option<f64>,
    pub mode: Mode,
    pub rescale: Rescale,
    pub budget_flops: f64,
    /// Worker threads, `0` for the rayon default.
    pub jobs: usize,
    /// Keep per-trial traces in the summary.
    pub keep_traces: bool,
}

impl ExperimentConfig {
    pub fn new(ensemble: EnsembleSpec, kmax: usize, trials: usize, seed: u64) -> Self {
        Self {
            ensemble,
            rhs: RhsKind::FirstBasis,
            algorithms: vec![Algorithm::CgResidual],
            kmax,
            trials,
            seed,
            eps: None,
            mode: Mode::Full,
            rescale: Rescale::Norm,
            budget_flops: DEFAULT_BUDGET_FLOPS,
            jobs: 0,
            keep_traces: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.ensemble.validate()?;
        if self.trials < 1 {
            return Err(Error::invalid("trials must be >= 1"));
        }
        if self.algorithms.is_empty() {
            return Err(Error::invalid("at least one algorithm is required"));
        }
        for (i, a) in self.algorithms.iter().enumerate() {
            if self.algorithms[..i].contains(a) {
                return Err(Error::invalid(format!("algorithm {a} listed twice")));
            }
        }
        if self.kmax >= self.ensemble.n {
            return Err(Error::invalid(format!("kmax must be < n, got kmax={} n={}", self.kmax, self.ensemble.n)));
        }
        if let Some(e) = self.eps {
            if !(e > 0.0 && e < 1.0) {
                return Err(Error::invalid(format!("eps must lie in (0, 1), got {e}")));
            }
        }
        if self.mode == Mode::Chi && self.ensemble.kind != EnsembleKind::Gaussian {
            return Err(Error::invalid("chi mode requires gaussian entries"));
        }
        if !(self.budget_flops > 0.0) {
            return Err(Error::invalid("budget must be positive"));
        }
        Ok(())
    }

    /// Rough floating-point work of the whole experiment.
    pub fn estimated_flops(&self) -> f64 {
        let (n, m) = (self.ensemble.n as f64, self.ensemble.m as f64);
        let d = self.ensemble.ratio();
        let steps = self
            .algorithms
            .iter()
            .map(|&a| match self.eps {
                Some(eps) if d < 1.0 => halting_prediction(a, d, eps).map(|h| h.iterations + 5).unwrap_or(self.ensemble.n),
                Some(_) => self.ensemble.n,
                None => 0,
            })
            .max()
            .unwrap_or(0)
            .max(self.kmax) as f64;
        let per_trial = match self.mode {
            Mode::Chi => 200.0 * (steps + 4.0),
            Mode::Full => {
                let field = if self.ensemble.beta == BetaField::COMPLEX { 4.0 } else { 1.0 };
                let nm = n * m * field;
                let mut f = 10.0 * nm;
                let has = |a: Algorithm| self.algorithms.contains(&a);
                let runs = [has(Algorithm::CgResidual) || has(Algorithm::CgError), has(Algorithm::MinresResidual), has(Algorithm::CgneRelative)];
                f += runs.iter().filter(|&&r| r).count() as f64 * 4.0 * nm * steps;
                let solves = has(Algorithm::CgError) as u8 + has(Algorithm::CgneRelative) as u8;
                f += solves as f64 * (n * nm + field * n * n * n / 3.0);
                f
            }
        };
        per_trial * self.trials as f64
    }
}

/// Traced statistics of one trial, indexed like `config.algorithms`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialTrace {
    /// Values for `k = 0..=kmax`.
    pub stats: Vec<Vec<f64>>,
    /// First `k` with `√statistic < eps`, when a tolerance is set.
    pub halts: Vec<Option<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub algorithm: Algorithm,
    pub k: usize,
    pub sample_mean: f64,
    pub predicted_mean: f64,
    pub rescaled_var: f64,
    pub predicted_rescaled_var: f64,
    pub stderr: f64,
    pub trials: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HaltingRow {
    pub algorithm: Algorithm,
    /// `None` counts trials that never met the tolerance.
    pub halt_k: Option<usize>,
    pub count: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SummaryTable {
    pub config: Option<ExperimentConfig>,
    pub rows: Vec<SummaryRow>,
    pub halting: Vec<HaltingRow>,
    #[serde(skip)]
    pub traces: Option<Vec<TrialTrace>>,
}

impl SummaryTable {
    pub fn row(&self, alg: Algorithm, k: usize) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.algorithm == alg && r.k == k)
    }

    /// Per-trial values of one statistic, when traces were kept.
    pub fn samples(&self, alg: Algorithm, k: usize) -> Option<Vec<f64>> {
        let cfg = self.config.as_ref()?;
        let i = cfg.algorithms.iter().position(|&a| a == alg)?;
        let traces = self.traces.as_ref()?;
        traces.iter().map(|t| t.stats[i].get(k).copied()).collect()
    }

    pub fn halting_histogram(&self, alg: Algorithm) -> BTreeMap<Option<usize>, usize> {
        self.halting.iter().filter(|h| h.algorithm == alg).map(|h| (h.halt_k, h.count)).collect()
    }

    /// Fraction of trials halting exactly at `k`.
    pub fn halting_fraction(&self, alg: Algorithm, k: usize) -> f64 {
        let hist = self.halting_histogram(alg);
        let total: usize = hist.values().sum();
        if total == 0 {
            return f64::NAN;
        }
        *hist.get(&Some(k)).unwrap_or(&0) as f64 / total as f64
    }
}

/// Runs every trial of `cfg` and summarizes. Trial `t` draws from stream `t`
/// of `cfg.seed`, and aggregation follows trial order, so the result does not
/// depend on the number of workers.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<SummaryTable> {
    cfg.validate()?;
    let estimated = cfg.estimated_flops();
    if estimated > cfg.budget_flops {
        return Err(Error::BudgetExceeded { estimated, budget: cfg.budget_flops });
    }
    let run = || -> Vec<Result<TrialTrace>> {
        match (cfg.mode, cfg.ensemble.beta) {
            (Mode::Chi, _) => (0..cfg.trials).into_par_iter().map(|t| chi_trial(cfg, t)).collect(),
            (Mode::Full, BetaField::REAL) => full_trials::<f64>(cfg),
            (Mode::Full, _) => full_trials::<Complex64>(cfg),
        }
    };
    let results = if cfg.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| Error::invalid(e.to_string()))?
            .install(run)
    } else {
        run()
    };
    let mut traces = Vec::with_capacity(cfg.trials);
    for (trial, r) in results.into_iter().enumerate() {
        traces.push(r.map_err(|e| Error::TrialFailed { trial, source: Box::new(e) })?);
    }
    Ok(summarize(cfg, traces))
}

fn summarize(cfg: &ExperimentConfig, traces: Vec<TrialTrace>) -> SummaryTable {
    let d = cfg.ensemble.ratio();
    let beta = cfg.ensemble.beta;
    let mut rows = Vec::new();
    let mut halting = Vec::new();
    for (i, &alg) in cfg.algorithms.iter().enumerate() {
        for k in 0..=cfg.kmax {
            let xs: Vec<f64> = traces.iter().map(|t| t.stats[i][k]).collect();
            let (mean, var) = mean_var(&xs);
            let (_, rvar) = mean_var(&rescaled(&xs, cfg.ensemble.m, cfg.rescale));
            rows.push(SummaryRow {
                algorithm: alg,
                k,
                sample_mean: mean,
                predicted_mean: leading_order(alg, d, k).unwrap_or(f64::NAN),
                rescaled_var: rvar,
                predicted_rescaled_var: predicted_rescaled_variance(alg, beta, d, k, cfg.rescale == Rescale::Squared)
                    .unwrap_or(f64::NAN),
                stderr: (var / xs.len() as f64).sqrt(),
                trials: xs.len(),
            });
        }
        if cfg.eps.is_some() {
            let mut hist = BTreeMap::<Option<usize>, usize>::new();
            for t in &traces {
                *hist.entry(t.halts[i]).or_default() += 1;
            }
            halting.extend(hist.into_iter().map(|(halt_k, count)| HaltingRow { algorithm: alg, halt_k, count }));
        }
    }
    SummaryTable {
        config: Some(cfg.clone()),
        rows,
        halting,
        traces: if cfg.keep_traces { Some(traces) } else { None },
    }
}

/// First `k` with `√value < eps`.
fn first_below(values: &[f64], eps: f64) -> Option<usize> {
    values.iter().position(|v| v.sqrt() < eps)
}

fn pad(mut v: Vec<f64>, len: usize) -> Vec<f64> {
    let last = v.last().copied().unwrap_or(0.0);
    let fill = if last == 0.0 { 0.0 } else { f64::NAN };
    v.resize(len.max(v.len()), fill);
    v.truncate(len);
    v
}

fn chi_trial(cfg: &ExperimentConfig, trial: usize) -> Result<TrialTrace> {
    let spec = &cfg.ensemble;
    let mut rng = RngStream::new(cfg.seed, trial as u64);
    let mut path = ChiPath::new(spec.n, spec.m, spec.beta, &mut rng)?;
    let value = |p: &ChiPath, a: Algorithm| match a {
        Algorithm::CgResidual => p.cg_r2sq(),
        Algorithm::CgError => p.cg_ewsq(),
        Algorithm::MinresResidual | Algorithm::CgneRelative => p.minres_r2sq(),
    };
    let mut stats = vec![Vec::with_capacity(cfg.kmax + 1); cfg.algorithms.len()];
    let mut halts = vec![None; cfg.algorithms.len()];
    loop {
        let k = path.step();
        for (i, &a) in cfg.algorithms.iter().enumerate() {
            let v = value(&path, a);
            if k <= cfg.kmax {
                stats[i].push(v);
            }
            if let Some(eps) = cfg.eps {
                if halts[i].is_none() && v.sqrt() < eps {
                    halts[i] = Some(k);
                }
            }
        }
        let done = k >= cfg.kmax && (cfg.eps.is_none() || halts.iter().all(Option::is_some));
        if done || k >= spec.n {
            break;
        }
        path.advance(&mut rng)?;
    }
    Ok(TrialTrace { stats, halts })
}

fn full_trials<S: Scalar<Real = f64>>(cfg: &ExperimentConfig) -> Vec<Result<TrialTrace>> {
    (0..cfg.trials)
        .into_par_iter()
        .map_init(
            || Matrix::<S>::zeros(cfg.ensemble.n, cfg.ensemble.m),
            |x, t| full_trial::<S>(cfg, t, x),
        )
        .collect()
}

fn full_trial<S: Scalar<Real = f64>>(cfg: &ExperimentConfig, trial: usize, x: &mut Matrix<S>) -> Result<TrialTrace> {
    let spec = &cfg.ensemble;
    let (n, m) = (spec.n, spec.m);
    let mut rng = RngStream::new(cfg.seed, trial as u64);
    fill_data_matrix(spec, &mut rng, x)?;
    let b = make_rhs::<S>(&cfg.rhs.rhs(), n, &mut rng)?;
    let has = |a: Algorithm| cfg.algorithms.contains(&a);
    let w = GramOperator::sample_covariance(&*x);
    let len = cfg.kmax + 1;
    let mut out = BTreeMap::<Algorithm, (Vec<f64>, Option<usize>)>::new();
    let halt = |v: &[f64]| cfg.eps.and_then(|e| first_below(v, e));

    let dense_solve = |rhs: &[S]| -> Result<Vec<S>> {
        let gram = x.gram(1.0);
        Ok(DenseCholesky::factor(&gram)?.solve(rhs))
    };

    if has(Algorithm::CgResidual) || has(Algorithm::CgError) {
        let want_r = has(Algorithm::CgResidual);
        let want_e = has(Algorithm::CgError);
        let x_true = if want_e { Some(dense_solve(&b)?) } else { None };
        let trace = cg_core(
            &w,
            &b,
            n,
            x_true.as_deref(),
            |k, rr, ew| {
                k >= cfg.kmax
                    && cfg.eps.is_none_or(|e| (!want_r || rr.sqrt() < e) && (!want_e || ew.is_some_and(|v| v.sqrt() < e)))
            },
            |_, _| {},
        )?;
        if want_r {
            let h = halt(&trace.r2sq);
            out.insert(Algorithm::CgResidual, (pad(trace.r2sq.clone(), len), h));
        }
        if let Some(e) = trace.ewsq {
            let h = halt(&e);
            out.insert(Algorithm::CgError, (pad(e, len), h));
        }
    }
    if has(Algorithm::MinresResidual) {
        let (trace, _) = minres_core(&w, &b, n, |k, r2| k >= cfg.kmax && cfg.eps.is_none_or(|e| r2.sqrt() < e))?;
        let h = halt(&trace.r2sq);
        out.insert(Algorithm::MinresResidual, (pad(trace.r2sq, len), h));
    }
    if has(Algorithm::CgneRelative) {
        let b_m = make_rhs::<S>(&cfg.rhs.rhs(), m, &mut rng)?;
        let mut rhs = vec![S::zero(); n];
        x.mul_vec(&b_m, &mut rhs);
        let x_true = dense_solve(&rhs)?;
        let mut e0 = None;
        let trace = cg_core(
            &w,
            &rhs,
            n,
            Some(&x_true),
            |k, _, ew| {
                let ew = ew.unwrap_or(0.0);
                let e0 = *e0.get_or_insert(ew);
                k >= cfg.kmax && cfg.eps.is_none_or(|e| (ew / e0).sqrt() < e)
            },
            |_, _| {},
        )?;
        let rel = trace.relative_ewsq().unwrap_or_default();
        let h = halt(&rel);
        out.insert(Algorithm::CgneRelative, (pad(rel, len), h));
    }

    let mut stats = Vec::with_capacity(cfg.algorithms.len());
    let mut halts = Vec::with_capacity(cfg.algorithms.len());
    for a in &cfg.algorithms {
        let (v, h) = out.remove(a).expect("every requested algorithm was run");
        stats.push(v);
        halts.push(h);
    }
    Ok(TrialTrace { stats, halts })
}

#[cfg(test)]
mod tests;
