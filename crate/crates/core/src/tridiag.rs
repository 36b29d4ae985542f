//! Jacobi matrices, bidiagonal factors and the Lanczos process.

use serde::{Deserialize, Serialize};

use crate::ensembles::{sample_chi, BetaField, RngStream};
use num_traits::{Float, One, Zero};

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm, scale_in_place, LinearOperator, Matrix};
use crate::scalar::{Real, Scalar};

/// Symmetric tridiagonal matrix with diagonal `a_j` and off-diagonal `b_j ≥ 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JacobiMatrix<R> {
    diag: Vec<R>,
    offdiag: Vec<R>,
}

impl<R: Real> JacobiMatrix<R> {
    pub fn new(diag: Vec<R>, offdiag: Vec<R>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::invalid("Jacobi matrix must have size >= 1"));
        }
        if offdiag.len() + 1 != diag.len() {
            return Err(Error::invalid(format!(
                "off-diagonal length {} does not match size {}",
                offdiag.len(),
                diag.len()
            )));
        }
        if diag.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("Jacobi diagonal must be finite"));
        }
        if let Some(j) = offdiag.iter().position(|v| !(*v >= R::zero()) || !v.is_finite()) {
            return Err(Error::invalid(format!("Jacobi off-diagonal entry {j} must be finite and >= 0")));
        }
        Ok(Self { diag, offdiag })
    }

    pub fn identity(n: usize) -> Self {
        Self { diag: vec![R::one(); n.max(1)], offdiag: vec![R::zero(); n.max(1) - 1] }
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[R] {
        &self.diag
    }

    pub fn offdiag(&self) -> &[R] {
        &self.offdiag
    }

    /// Leading `k x k` block.
    pub fn leading(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.n() {
            return Err(Error::OutOfRange { index: k, size: self.n() });
        }
        Ok(Self { diag: self.diag[..k].to_vec(), offdiag: self.offdiag[..k - 1].to_vec() })
    }

    pub fn to_dense(&self) -> Matrix<R>
    where
        R: Scalar<Real = R>,
    {
        let n = self.n();
        Matrix::from_fn(n, n, |i, j| {
            if i == j {
                self.diag[i]
            } else if i + 1 == j {
                self.offdiag[i]
            } else if j + 1 == i {
                self.offdiag[j]
            } else {
                R::zero()
            }
        })
    }

    /// `y <- T x`.
    pub fn mul_vec(&self, x: &[R], y: &mut [R]) {
        let n = self.n();
        for i in 0..n {
            let mut v = self.diag[i] * x[i];
            if i > 0 {
                v += self.offdiag[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                v += self.offdiag[i] * x[i + 1];
            }
            y[i] = v;
        }
    }
}

impl<R: Real + Scalar<Real = R>> LinearOperator<R> for JacobiMatrix<R> {
    fn dim(&self) -> usize {
        self.n()
    }
    fn apply(&self, x: &[R], y: &mut [R]) {
        self.mul_vec(x, y)
    }
}

/// Lower bidiagonal `H` with diagonal `α_j > 0` and subdiagonal `β_j ≥ 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BidiagonalFactor<R> {
    alpha: Vec<R>,
    beta: Vec<R>,
}

impl<R: Real> BidiagonalFactor<R> {
    pub fn new(alpha: Vec<R>, beta: Vec<R>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::invalid("bidiagonal factor must have size >= 1"));
        }
        if beta.len() + 1 != alpha.len() {
            return Err(Error::invalid(format!(
                "subdiagonal length {} does not match size {}",
                beta.len(),
                alpha.len()
            )));
        }
        if let Some(j) = alpha.iter().position(|v| !(*v > R::zero()) || !v.is_finite()) {
            return Err(Error::invalid(format!("alpha[{j}] must be finite and > 0")));
        }
        if let Some(j) = beta.iter().position(|v| !(*v >= R::zero()) || !v.is_finite()) {
            return Err(Error::invalid(format!("beta[{j}] must be finite and >= 0")));
        }
        Ok(Self { alpha, beta })
    }

    pub fn identity(n: usize) -> Self {
        Self { alpha: vec![R::one(); n.max(1)], beta: vec![R::zero(); n.max(1) - 1] }
    }

    pub fn n(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &[R] {
        &self.alpha
    }

    pub fn beta(&self) -> &[R] {
        &self.beta
    }

    /// Trailing block `H[k.., k..]`.
    pub fn suffix(&self, k: usize) -> Result<Self> {
        if k >= self.n() {
            return Err(Error::OutOfRange { index: k, size: self.n() });
        }
        Ok(Self { alpha: self.alpha[k..].to_vec(), beta: self.beta[k..].to_vec() })
    }
}

/// Output of [`lanczos`].
#[derive(Clone, Debug)]
pub struct LanczosResult<S: Scalar> {
    pub jacobi: JacobiMatrix<S::Real>,
    pub steps_completed: usize,
    /// The process stopped on a vanishing off-diagonal before `max_steps`.
    pub terminated_early: bool,
    /// Orthonormal Lanczos vectors `q_0..q_{n-1}`, if requested.
    pub basis: Option<Vec<Vec<S>>>,
    /// The off-diagonal `b_{n-1}` produced by the last step.
    pub last_offdiag: S::Real,
}

#[derive(Clone, Copy, Debug)]
pub struct LanczosOptions {
    pub max_steps: usize,
    pub reorthogonalize: bool,
    /// Breakdown when `b_j < breakdown_tol · ‖W‖_est`.
    pub breakdown_tol: f64,
    pub keep_basis: bool,
}

impl LanczosOptions {
    pub fn new(max_steps: usize) -> Self {
        Self { max_steps, reorthogonalize: true, breakdown_tol: 1e-12, keep_basis: false }
    }
}

/// Lanczos tridiagonalization of a self-adjoint operator started at unit `b`.
pub fn lanczos<S: Scalar, A: LinearOperator<S> + ?Sized>(
    op: &A,
    b: &[S],
    opts: &LanczosOptions,
) -> Result<LanczosResult<S>> {
    let dim = op.dim();
    if b.len() != dim {
        return Err(Error::invalid(format!("b has length {}, operator has dimension {dim}", b.len())));
    }
    if opts.max_steps < 1 {
        return Err(Error::invalid("max_steps must be >= 1"));
    }
    let nb = norm(b);
    if (nb - S::Real::one()).abs() > S::Real::epsilon().sqrt() {
        return Err(Error::invalid(format!("b must have unit norm, got {}", nb)));
    }
    let steps = opts.max_steps.min(dim);
    let tol = S::Real::lit(opts.breakdown_tol);
    let keep = opts.reorthogonalize || opts.keep_basis;

    let mut basis: Vec<Vec<S>> = Vec::new();
    let mut diag = Vec::with_capacity(steps);
    let mut off = Vec::with_capacity(steps);
    let mut q = b.to_vec();
    let mut q_prev = vec![S::zero(); dim];
    let mut w = vec![S::zero(); dim];
    let mut b_prev = S::Real::zero();
    let mut w_est = S::Real::zero();
    let mut terminated_early = false;
    let mut last = S::Real::zero();

    for j in 0..steps {
        op.apply(&q, &mut w);
        w_est = w_est.max(norm(&w));
        let a = dot(&q, &w).re();
        diag.push(a);
        axpy(S::from_real(-a), &q, &mut w);
        if j > 0 {
            axpy(S::from_real(-b_prev), &q_prev, &mut w);
        }
        if opts.reorthogonalize {
            for _ in 0..2 {
                for v in basis.iter().chain(std::iter::once(&q)) {
                    let c = dot(v, &w);
                    axpy(-c, v, &mut w);
                }
            }
        }
        let bj = norm(&w);
        last = bj;
        let done = j + 1 == steps;
        let breakdown = !(bj > tol * w_est.max(S::Real::min_positive_value()));
        if breakdown && !done {
            terminated_early = true;
        }
        if keep {
            basis.push(q.clone());
        }
        if done || breakdown {
            break;
        }
        off.push(bj);
        std::mem::swap(&mut q_prev, &mut q);
        q.copy_from_slice(&w);
        scale_in_place(&mut q, S::Real::one() / bj);
        b_prev = bj;
    }

    let steps_completed = diag.len();
    Ok(LanczosResult {
        jacobi: JacobiMatrix::new(diag, off)?,
        steps_completed,
        terminated_early,
        basis: if opts.keep_basis { Some(basis) } else { None },
        last_offdiag: last,
    })
}

/// Independent chi draws with the law of the Golub–Kahan factor of a Gaussian
/// `N x M` data matrix started at `f₁`:
/// `α_j ~ χ_{β(M-j)}/√(βM)`, `β_j ~ χ_{β(N-j-1)}/√(βM)`.
pub fn golub_kahan_sample(n: usize, m: usize, beta: BetaField, rng: &mut RngStream) -> Result<BidiagonalFactor<f64>> {
    golub_kahan_leading(n, m, beta, n, rng)
}

/// Leading `len x len` block of [`golub_kahan_sample`].
pub fn golub_kahan_leading(
    n: usize,
    m: usize,
    beta: BetaField,
    len: usize,
    rng: &mut RngStream,
) -> Result<BidiagonalFactor<f64>> {
    if n == 0 || n > m {
        return Err(Error::invalid(format!("need 1 <= n <= m, got n={n} m={m}")));
    }
    if len == 0 || len > n {
        return Err(Error::OutOfRange { index: len, size: n });
    }
    let b = beta.as_f64();
    let s = 1.0 / (b * m as f64).sqrt();
    let mut alpha = Vec::with_capacity(len);
    let mut sub = Vec::with_capacity(len - 1);
    for j in 0..len {
        alpha.push(sample_chi(b * (m - j) as f64, rng)? * s);
        if j + 1 < len {
            sub.push(sample_chi(b * (n - j - 1) as f64, rng)? * s);
        }
    }
    BidiagonalFactor::new(alpha, sub)
}

/// Cholesky factor `T = H Hᵀ` of a positive definite Jacobi matrix.
pub fn cholesky_jacobi<R: Real>(t: &JacobiMatrix<R>) -> Result<BidiagonalFactor<R>> {
    let n = t.n();
    let mut alpha = Vec::with_capacity(n);
    let mut beta = Vec::with_capacity(n - 1);
    let mut pivot = t.diag[0];
    for j in 0..n {
        if !(pivot > R::zero()) {
            return Err(Error::NotPositiveDefinite { step: j, pivot: pivot.to_f64_lossy() });
        }
        let a = pivot.sqrt();
        alpha.push(a);
        if j + 1 < n {
            let b = t.offdiag[j] / a;
            beta.push(b);
            pivot = t.diag[j + 1] - b * b;
        }
    }
    BidiagonalFactor::new(alpha, beta)
}

/// `T = H Hᵀ`.
pub fn jacobi_from_bidiagonal<R: Real>(h: &BidiagonalFactor<R>) -> JacobiMatrix<R> {
    let n = h.n();
    let diag = (0..n)
        .map(|j| {
            let a2 = h.alpha[j] * h.alpha[j];
            if j == 0 {
                a2
            } else {
                a2 + h.beta[j - 1] * h.beta[j - 1]
            }
        })
        .collect();
    let off = (0..n - 1).map(|j| h.alpha[j] * h.beta[j]).collect();
    JacobiMatrix { diag, offdiag: off }
}

/// `f₁ᵀ (H Hᵀ)⁻¹ f₁`.
pub fn inverse_first_entry<R: Real>(h: &BidiagonalFactor<R>) -> Result<R> {
    Ok(suffix_inverse_first_entries(h)?[0])
}

/// `g_k = f₁ᵀ (L_k L_kᵀ)⁻¹ f₁` for every trailing block `L_k = H[k.., k..]`,
/// by the backward recursion `g_k = (1 + β_k² g_{k+1}) / α_k²`.
pub fn suffix_inverse_first_entries<R: Real>(h: &BidiagonalFactor<R>) -> Result<Vec<R>> {
    let n = h.n();
    if let Some(j) = h.alpha.iter().position(|a| *a == R::zero()) {
        return Err(Error::Degenerate(format!("alpha[{j}] is zero")));
    }
    let mut g = vec![R::zero(); n];
    let a = h.alpha[n - 1];
    g[n - 1] = R::one() / (a * a);
    for k in (0..n - 1).rev() {
        let a = h.alpha[k];
        let b = h.beta[k];
        g[k] = (R::one() + b * b * g[k + 1]) / (a * a);
    }
    Ok(g)
}
