//! Matrix-free sampler of CG, MINRES and normal-equation statistics on the
//! Gaussian ensembles, built from independent chi variables.

use serde::{Deserialize, Serialize};

use crate::ensembles::{sample_chi, sample_chi_sq, BetaField, EnsembleSpec, RngStream};
use crate::error::{Error, Result};
use crate::harness::{run_experiment, two_sample_ks, ExperimentConfig, Mode, RhsKind};
use crate::theory::Algorithm;

/// One draw of every traced statistic for `k = 0..=kmax`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiModelDraw {
    pub cg_r2sq: Vec<f64>,
    pub cg_ewsq: Vec<f64>,
    pub minres_r2sq: Vec<f64>,
    pub cgne_relative_ewsq: Vec<f64>,
    pub sigma_inv: f64,
    pub delta_nm: f64,
}

impl ChiModelDraw {
    /// The traced statistic of `alg`.
    pub fn statistic(&self, alg: Algorithm) -> &[f64] {
        match alg {
            Algorithm::CgError => &self.cg_ewsq,
            Algorithm::CgResidual => &self.cg_r2sq,
            Algorithm::MinresResidual => &self.minres_r2sq,
            Algorithm::CgneRelative => &self.cgne_relative_ewsq,
        }
    }
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Sequential sampler of one chi-model path: `Σ⁻¹` and `Δ` are drawn up front,
/// then `(α_j, β_j)` are drawn on demand as the step advances.
#[derive(Clone, Debug)]
pub struct ChiPath {
    n: usize,
    m: usize,
    beta: f64,
    scale: f64,
    k: usize,
    log_r2: f64,
    log_inv_sum: f64,
    pub sigma_inv: f64,
    pub delta_nm: f64,
}

impl ChiPath {
    pub fn new(n: usize, m: usize, beta: BetaField, rng: &mut RngStream) -> Result<Self> {
        if n == 0 || n > m {
            return Err(Error::invalid(format!("need 1 <= n <= m, got n={n} m={m}")));
        }
        let b = beta.as_f64();
        let sigma_inv = (b * m as f64).sqrt() / sample_chi(b * (m - n + 1) as f64, rng)?;
        let delta_nm = sample_chi_sq(b * n as f64, rng)? / sample_chi_sq(b * m as f64, rng)?;
        Ok(Self {
            n,
            m,
            beta: b,
            scale: 1.0 / (b * m as f64).sqrt(),
            k: 0,
            log_r2: 0.0,
            log_inv_sum: 0.0,
            sigma_inv,
            delta_nm,
        })
    }

    /// Current step `k`.
    pub fn step(&self) -> usize {
        self.k
    }

    /// CG `‖r_k‖²`.
    pub fn cg_r2sq(&self) -> f64 {
        self.log_r2.exp()
    }

    /// CG `‖e_k‖_W²`.
    pub fn cg_ewsq(&self) -> f64 {
        self.cg_r2sq() * self.sigma_inv * self.sigma_inv
    }

    /// MINRES `‖r_k‖²`, which also has the law of the relative normal-equation error.
    pub fn minres_r2sq(&self) -> f64 {
        (-self.log_inv_sum).exp()
    }

    /// Moves from step `k` to `k + 1`. At `k = n − 1` the Krylov space is
    /// exhausted and every statistic becomes zero.
    pub fn advance(&mut self, rng: &mut RngStream) -> Result<()> {
        let j = self.k;
        if j >= self.n {
            return Err(Error::OutOfRange { index: j + 1, size: self.n });
        }
        let alpha = sample_chi(self.beta * (self.m - j) as f64, rng)? * self.scale;
        let beta = if j + 1 < self.n { sample_chi(self.beta * (self.n - j - 1) as f64, rng)? * self.scale } else { 0.0 };
        self.log_r2 += 2.0 * (beta.ln() - alpha.ln());
        self.log_inv_sum = log_add_exp(self.log_inv_sum, -self.log_r2);
        self.k += 1;
        Ok(())
    }
}

/// Draws the statistics on `W_β(N, M)` with a unit right-hand side.
pub fn draw(n: usize, m: usize, beta: BetaField, kmax: usize, rng: &mut RngStream) -> Result<ChiModelDraw> {
    if kmax >= n {
        return Err(Error::OutOfRange { index: kmax, size: n });
    }
    let mut path = ChiPath::new(n, m, beta, rng)?;
    let mut cg_r2sq = Vec::with_capacity(kmax + 1);
    let mut minres_r2sq = Vec::with_capacity(kmax + 1);
    loop {
        cg_r2sq.push(path.cg_r2sq());
        minres_r2sq.push(path.minres_r2sq());
        if path.step() == kmax {
            break;
        }
        path.advance(rng)?;
    }
    let s2 = path.sigma_inv * path.sigma_inv;
    let cg_ewsq = cg_r2sq.iter().map(|r| r * s2).collect();
    let cgne_relative_ewsq = minres_r2sq.clone();
    Ok(ChiModelDraw { cg_r2sq, cg_ewsq, minres_r2sq, cgne_relative_ewsq, sigma_inv: path.sigma_inv, delta_nm: path.delta_nm })
}

/// Two-sample KS statistics between chi-model and full-matrix samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub n: usize,
    pub m: usize,
    pub trials: usize,
    /// `(algorithm, k, KS statistic)` for every traced statistic and `k = 1..=kmax`.
    pub rows: Vec<(Algorithm, usize, f64)>,
}

impl CrossValidation {
    pub fn ks(&self, alg: Algorithm, k: usize) -> Option<f64> {
        self.rows.iter().find(|(a, kk, _)| *a == alg && *kk == k).map(|r| r.2)
    }

    pub fn max_ks(&self) -> f64 {
        self.rows.iter().map(|r| r.2).fold(0.0, f64::max)
    }
}

/// Compares chi-model draws against full Gaussian-matrix solver traces with
/// `b = f₁`. The two sides use independent seeds derived from `seed`.
pub fn cross_validate(
    n: usize,
    m: usize,
    beta: BetaField,
    kmax: usize,
    trials: usize,
    seed: u64,
) -> Result<CrossValidation> {
    let spec = EnsembleSpec::gaussian(n, m, beta)?;
    let mut cfg = ExperimentConfig::new(spec, kmax, trials, seed);
    cfg.rhs = RhsKind::FirstBasis;
    cfg.algorithms = vec![Algorithm::CgResidual, Algorithm::CgError, Algorithm::MinresResidual];
    cfg.keep_traces = true;
    cfg.mode = Mode::Full;
    let full = run_experiment(&cfg)?;
    cfg.mode = Mode::Chi;
    cfg.seed = seed ^ 0x9e37_79b9_7f4a_7c15;
    let chi = run_experiment(&cfg)?;
    let mut rows = Vec::new();
    for &alg in &cfg.algorithms {
        for k in 1..=kmax {
            let a = full.samples(alg, k).ok_or_else(|| Error::Degenerate("missing traces".into()))?;
            let b = chi.samples(alg, k).ok_or_else(|| Error::Degenerate("missing traces".into()))?;
            rows.push((alg, k, two_sample_ks(&a, &b)?));
        }
    }
    Ok(CrossValidation { n, m, trials, rows })
}
