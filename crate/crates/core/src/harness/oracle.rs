//! Agreement between solver traces and the bidiagonal-factor formulas on a
//! sampled instance.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::RhsKind;
use crate::ensembles::{make_rhs, sample_data_matrix, BetaField, EnsembleSpec, RngStream};
use crate::error::Result;
use crate::linalg::{DenseCholesky, GramOperator};
use crate::scalar::Scalar;
use crate::solvers::{
    cg_solve, minres_solve, predicted_cg_errors, predicted_cg_residuals, predicted_minres_residuals,
};
use crate::tridiag::{cholesky_jacobi, lanczos, LanczosOptions};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub n: usize,
    pub m: usize,
    pub lanczos_steps: usize,
    /// Iterations compared, per statistic.
    pub compared: [usize; 3],
    pub max_rel_cg_residual: f64,
    pub max_rel_cg_error: f64,
    pub max_rel_minres_residual: f64,
}

impl OracleReport {
    pub fn max_rel(&self) -> f64 {
        self.max_rel_cg_residual.max(self.max_rel_cg_error).max(self.max_rel_minres_residual)
    }
}

/// Samples one instance, computes its Jacobi matrix by Lanczos and compares
/// CG and MINRES traces with the closed forms at every `k` where the observed
/// norm exceeds `floor`.
pub fn oracle_check(spec: &EnsembleSpec, rhs: RhsKind, seed: u64, floor: f64) -> Result<OracleReport> {
    spec.validate()?;
    if spec.beta == BetaField::REAL {
        check::<f64>(spec, rhs, seed, floor)
    } else {
        check::<Complex64>(spec, rhs, seed, floor)
    }
}

fn max_rel(observed: &[f64], predicted: &[f64], floor: f64) -> (f64, usize) {
    let mut worst = 0.0f64;
    let mut count = 0;
    for (o, p) in observed.iter().zip(predicted) {
        if *o > floor {
            worst = worst.max((o - p).abs() / o);
            count += 1;
        }
    }
    (worst, count)
}

fn check<S: Scalar<Real = f64>>(spec: &EnsembleSpec, rhs: RhsKind, seed: u64, floor: f64) -> Result<OracleReport> {
    let (n, m) = (spec.n, spec.m);
    let mut rng = RngStream::new(seed, 0);
    let x = sample_data_matrix::<S>(spec, &mut rng)?;
    let b = make_rhs::<S>(&rhs.rhs(), n, &mut rng)?;
    let w = GramOperator::sample_covariance(&x);
    let lz = lanczos(&w, &b, &LanczosOptions::new(n))?;
    let h = cholesky_jacobi(&lz.jacobi)?;
    let steps = h.n();

    let x_true = DenseCholesky::factor(&x.gram(1.0))?.solve(&b);
    let cg = cg_solve(&w, &b, steps, floor, Some(&x_true))?;
    let mr = minres_solve(&w, &b, steps, floor)?;
    let kmax = cg.iterations.min(steps - 1);

    let r_obs = cg.residual_norms();
    let r_pred = predicted_cg_residuals(&h, cg.iterations).values;
    let e_obs: Vec<f64> = cg.ewsq.as_ref().map(|e| e.iter().map(|v| v.sqrt()).collect()).unwrap_or_default();
    let e_pred = predicted_cg_errors(&h, kmax)?.values;
    let m_obs = mr.residual_norms();
    let m_pred = predicted_minres_residuals(&h, mr.iterations).values;

    let (a, ca) = max_rel(&r_obs, &r_pred, floor);
    let (e, ce) = max_rel(&e_obs[..=kmax], &e_pred, floor);
    let (mm, cm) = max_rel(&m_obs, &m_pred, floor);
    Ok(OracleReport {
        n,
        m,
        lanczos_steps: steps,
        compared: [ca, ce, cm],
        max_rel_cg_residual: a,
        max_rel_cg_error: e,
        max_rel_minres_residual: mm,
    })
}
