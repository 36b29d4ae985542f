//! CG, MINRES and CG on the normal equations, with per-iteration traces, and
//! the closed-form residual and error formulas in terms of a bidiagonal factor.

use num_traits::{Float, One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm, norm_sq, DenseCholesky, GramOperator, LinearOperator, Matrix};
use crate::scalar::{Real, Scalar};
use crate::tridiag::{suffix_inverse_first_entries, BidiagonalFactor};

/// Per-iteration record of one solver run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveTrace<R> {
    /// `‖r_k‖₂²` for `k = 0..=iterations`.
    pub r2sq: Vec<R>,
    /// `‖e_k‖_W²` for `k = 0..=iterations`, when the true solution is known.
    pub ewsq: Option<Vec<R>>,
    pub iterations: usize,
    /// First `k` with `‖r_k‖₂ < tol`.
    pub converged_at: Option<usize>,
}

impl<R: Real> SolveTrace<R> {
    pub fn residual_norms(&self) -> Vec<R> {
        self.r2sq.iter().map(|v| v.sqrt()).collect()
    }

    /// `‖e_k‖_W² / ‖e_0‖_W²`.
    pub fn relative_ewsq(&self) -> Option<Vec<R>> {
        let e = self.ewsq.as_ref()?;
        let e0 = *e.first()?;
        Some(e.iter().map(|v| *v / e0).collect())
    }

    fn finish(mut self, tol: R) -> Self {
        self.iterations = self.r2sq.len() - 1;
        self.converged_at = self.r2sq.iter().position(|v| v.sqrt() < tol);
        self
    }
}

fn check_dims<S: Scalar, A: LinearOperator<S> + ?Sized>(op: &A, b: &[S], x: Option<&[S]>) -> Result<()> {
    if b.len() != op.dim() {
        return Err(Error::invalid(format!("b has length {}, operator has dimension {}", b.len(), op.dim())));
    }
    if let Some(x) = x {
        if x.len() != op.dim() {
            return Err(Error::invalid("x_true has the wrong length"));
        }
    }
    Ok(())
}

/// Conjugate gradients from `x₀ = 0`, at most `kmax` iterations, stopping
/// once `‖r_k‖₂ < tol`. With `x_true`, also records `‖e_k‖_W² = e_k^* r_k`.
pub fn cg_solve<S: Scalar, A: LinearOperator<S> + ?Sized>(
    op: &A,
    b: &[S],
    kmax: usize,
    tol: S::Real,
    x_true: Option<&[S]>,
) -> Result<SolveTrace<S::Real>> {
    let trace = cg_core(op, b, kmax, x_true, |_, rr, _| rr.sqrt() < tol, |_, _| {})?;
    Ok(trace.finish(tol))
}

/// CG that stops before step `k` once `stop(k, ‖r_k‖², ‖e_k‖_W²)` holds.
/// `converged_at` is left unset.
pub(crate) fn cg_core<S: Scalar, A: LinearOperator<S> + ?Sized>(
    op: &A,
    b: &[S],
    kmax: usize,
    x_true: Option<&[S]>,
    mut stop: impl FnMut(usize, S::Real, Option<S::Real>) -> bool,
    mut on_step: impl FnMut(&[S], &[S]),
) -> Result<SolveTrace<S::Real>> {
    check_dims(op, b, x_true)?;
    let n = b.len();
    let zero = S::Real::zero();
    let mut x = vec![S::zero(); n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut wp = vec![S::zero(); n];
    let mut rr = norm_sq(&r);
    let ew = |x: &[S], r: &[S]| -> S::Real {
        let xt = x_true.expect("checked by caller");
        let mut acc = S::zero();
        for ((&t, &xi), &ri) in xt.iter().zip(x).zip(r) {
            acc += (t - xi).conj() * ri;
        }
        acc.re().max(zero)
    };
    let mut trace = SolveTrace {
        r2sq: vec![rr],
        ewsq: x_true.map(|_| vec![ew(&x, &r)]),
        iterations: 0,
        converged_at: None,
    };
    on_step(&x, &r);
    for k in 0..kmax {
        if stop(k, rr, trace.ewsq.as_ref().and_then(|e| e.last().copied())) {
            break;
        }
        if rr == zero {
            break;
        }
        op.apply(&p, &mut wp);
        let curvature = dot(&p, &wp).re();
        if !(curvature > zero) {
            return Err(Error::LossOfDefiniteness { iteration: k + 1, curvature: curvature.to_f64_lossy() });
        }
        let a = rr / curvature;
        axpy(S::from_real(a), &p, &mut x);
        axpy(S::from_real(-a), &wp, &mut r);
        let rr_new = norm_sq(&r);
        let g = rr_new / rr;
        for (pi, &ri) in p.iter_mut().zip(&r) {
            *pi = ri + pi.scale(g);
        }
        rr = rr_new;
        trace.r2sq.push(rr);
        if let Some(e) = trace.ewsq.as_mut() {
            e.push(ew(&x, &r));
        }
        on_step(&x, &r);
    }
    trace.iterations = trace.r2sq.len() - 1;
    Ok(trace)
}

/// MINRES (Paige–Saunders) from `x₀ = 0`. The recorded residuals are the
/// least-squares residuals of the `(k+1) x k` Lanczos problem; a Lanczos
/// breakdown is treated as exact convergence.
pub fn minres_solve<S: Scalar, A: LinearOperator<S> + ?Sized>(
    op: &A,
    b: &[S],
    kmax: usize,
    tol: S::Real,
) -> Result<SolveTrace<S::Real>> {
    let (trace, _) = minres_core(op, b, kmax, |_, r2| r2.sqrt() < tol)?;
    Ok(trace.finish(tol))
}

/// MINRES that stops before step `k` once `stop(k, ‖r_k‖²)` holds.
pub(crate) fn minres_core<S: Scalar, A: LinearOperator<S> + ?Sized>(
    op: &A,
    b: &[S],
    kmax: usize,
    mut stop: impl FnMut(usize, S::Real) -> bool,
) -> Result<(SolveTrace<S::Real>, Vec<S>)> {
    check_dims(op, b, None)?;
    let n = b.len();
    let zero = S::Real::zero();
    let one = S::Real::one();
    let breakdown = S::Real::lit(1e-12);

    let beta1 = norm(b);
    let mut x = vec![S::zero(); n];
    let mut trace = SolveTrace { r2sq: vec![beta1 * beta1], ewsq: None, iterations: 0, converged_at: None };
    if beta1 == zero {
        return Ok((trace, x));
    }
    let mut v_prev = vec![S::zero(); n];
    let mut v: Vec<S> = b.iter().map(|z| z.scale(one / beta1)).collect();
    let mut y = vec![S::zero(); n];
    let (mut w, mut w1, mut w2) = (vec![S::zero(); n], vec![S::zero(); n], vec![S::zero(); n]);
    let mut beta = zero;
    let (mut dbar, mut epsln, mut phibar) = (zero, zero, beta1);
    let (mut cs, mut sn) = (-one, zero);
    let mut w_est = zero;

    for k in 0..kmax {
        if stop(k, phibar * phibar) {
            break;
        }
        op.apply(&v, &mut y);
        w_est = w_est.max(norm(&y));
        let alfa = dot(&v, &y).re();
        axpy(S::from_real(-alfa), &v, &mut y);
        if k > 0 {
            axpy(S::from_real(-beta), &v_prev, &mut y);
        }
        let mut beta_next = norm(&y);
        let broke = !(beta_next > breakdown * w_est);
        if broke {
            beta_next = zero;
        }

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta_next;
        dbar = -cs * beta_next;
        let gamma = gbar.hypot(beta_next).max(S::Real::epsilon());
        cs = gbar / gamma;
        sn = beta_next / gamma;
        let phi = cs * phibar;
        phibar = sn * phibar;

        std::mem::swap(&mut w1, &mut w2);
        std::mem::swap(&mut w2, &mut w);
        let ig = one / gamma;
        for i in 0..n {
            w[i] = (v[i] - w1[i].scale(oldeps) - w2[i].scale(delta)).scale(ig);
        }
        axpy(S::from_real(phi), &w, &mut x);
        trace.r2sq.push(phibar * phibar);

        if broke {
            if let Some(last) = trace.r2sq.last_mut() {
                *last = zero;
            }
            break;
        }
        std::mem::swap(&mut v_prev, &mut v);
        for (vi, &yi) in v.iter_mut().zip(&y) {
            *vi = yi.scale(one / beta_next);
        }
        beta = beta_next;
    }
    trace.iterations = trace.r2sq.len() - 1;
    Ok((trace, x))
}

/// CG applied to `W x = X b_m` with `W = X X^*`, for a data matrix with
/// entries of variance `1/M`. The error trace is taken against `x = W⁻¹ X b_m`
/// from a dense Cholesky solve.
pub fn cg_normal_equations<S: Scalar>(
    x: &Matrix<S>,
    b_m: &[S],
    kmax: usize,
    tol: S::Real,
) -> Result<SolveTrace<S::Real>> {
    let (n, m) = (x.rows(), x.cols());
    if b_m.len() != m {
        return Err(Error::invalid(format!("b has length {}, expected M = {m}", b_m.len())));
    }
    let mut rhs = vec![S::zero(); n];
    x.mul_vec(b_m, &mut rhs);
    let dense = x.gram(S::Real::one());
    let x_true = DenseCholesky::factor(&dense)?.solve(&rhs);
    let op = GramOperator::sample_covariance(x);
    cg_solve(&op, &rhs, kmax, tol, Some(&x_true))
}

/// Norms predicted from a bidiagonal factor for `k = 0..=kmax`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction<R> {
    pub values: Vec<R>,
    /// First `k` at which the value is exactly zero (the Krylov space is exhausted).
    pub exact_convergence_at: Option<usize>,
}

impl<R: Real> Prediction<R> {
    pub fn squared(&self) -> Vec<R> {
        self.values.iter().map(|v| *v * *v).collect()
    }
}

/// `ln ‖r_k‖₂ = Σ_{j<k} (ln β_j − ln α_j)` for CG, `-∞` once exhausted.
fn cg_log_residuals<R: Real>(h: &BidiagonalFactor<R>, kmax: usize) -> (Vec<R>, Option<usize>) {
    let (al, be) = (h.alpha(), h.beta());
    let mut out = Vec::with_capacity(kmax + 1);
    let mut acc = R::zero();
    let mut exact = None;
    out.push(acc);
    for k in 1..=kmax {
        let j = k - 1;
        if exact.is_none() && (j >= be.len() || be[j] == R::zero()) {
            exact = Some(k);
        }
        if exact.is_some() {
            out.push(R::neg_infinity());
            continue;
        }
        acc += be[j].ln() - al[j].ln();
        out.push(acc);
    }
    (out, exact)
}

/// CG residual norms `‖r_k‖₂ = ∏_{j<k} β_j/α_j` for a unit right-hand side.
pub fn predicted_cg_residuals<R: Real>(h: &BidiagonalFactor<R>, kmax: usize) -> Prediction<R> {
    let (logs, exact) = cg_log_residuals(h, kmax);
    Prediction { values: logs.into_iter().map(|l| l.exp()).collect(), exact_convergence_at: exact }
}

/// CG errors `‖e_k‖_W = ‖r_k‖₂ · (f₁ᵀ (L_k L_kᵀ)⁻¹ f₁)^{1/2}` with
/// `L_k = H[k.., k..]`, for `k = 0..=kmax < n`.
pub fn predicted_cg_errors<R: Real>(h: &BidiagonalFactor<R>, kmax: usize) -> Result<Prediction<R>> {
    if kmax >= h.n() {
        return Err(Error::OutOfRange { index: kmax, size: h.n() });
    }
    let g = suffix_inverse_first_entries(h)?;
    let (logs, exact) = cg_log_residuals(h, kmax);
    let half = R::lit(0.5);
    let values = logs.iter().zip(&g).map(|(&l, &gk)| (l + half * gk.ln()).exp()).collect();
    Ok(Prediction { values, exact_convergence_at: exact })
}

fn log_add_exp<R: Real>(a: R, b: R) -> R {
    if a == R::neg_infinity() {
        return b;
    }
    if b == R::neg_infinity() {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// MINRES residual norms `‖r_k‖₂ = (Σ_{j≤k} ∏_{ℓ<j} α_ℓ²/β_ℓ²)^{-1/2}`.
pub fn predicted_minres_residuals<R: Real>(h: &BidiagonalFactor<R>, kmax: usize) -> Prediction<R> {
    let (al, be) = (h.alpha(), h.beta());
    let two = R::lit(2.0);
    let mut values = Vec::with_capacity(kmax + 1);
    let mut term = R::zero();
    let mut total = R::zero();
    let mut exact = None;
    values.push(R::one());
    for k in 1..=kmax {
        let j = k - 1;
        if exact.is_none() && (j >= be.len() || be[j] == R::zero()) {
            exact = Some(k);
        }
        if exact.is_some() {
            values.push(R::zero());
            continue;
        }
        term += two * (al[j].ln() - be[j].ln());
        total = log_add_exp(total, term);
        values.push((-total / two).exp());
    }
    Prediction { values, exact_convergence_at: exact }
}
