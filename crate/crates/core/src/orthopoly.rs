//! Spectral measures, moments and orthogonal polynomial recurrences.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::symmetric_tridiagonal_eigen;
use crate::scalar::Real;
use crate::tridiag::{inverse_first_entry, BidiagonalFactor, JacobiMatrix};

const MERGE_TOL: f64 = 1e-12;

/// Finite atomic measure `Σ ω_j δ_{λ_j}` with strictly increasing nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralMeasure<R> {
    nodes: Vec<R>,
    weights: Vec<R>,
}

impl<R: Real> SpectralMeasure<R> {
    /// Sorts the atoms and merges nodes that agree to 1e-12 relative.
    pub fn new(nodes: Vec<R>, weights: Vec<R>) -> Result<Self> {
        if nodes.len() != weights.len() {
            return Err(Error::invalid("nodes and weights differ in length"));
        }
        if nodes.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("nodes must be finite"));
        }
        if weights.iter().any(|w| !(*w >= R::zero()) || !w.is_finite()) {
            return Err(Error::invalid("weights must be finite and >= 0"));
        }
        let mut atoms: Vec<(R, R)> = nodes.into_iter().zip(weights).collect();
        atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"));
        let tol = R::lit(MERGE_TOL);
        let mut out_n: Vec<R> = Vec::with_capacity(atoms.len());
        let mut out_w: Vec<R> = Vec::with_capacity(atoms.len());
        for (x, w) in atoms {
            if let (Some(last), Some(lw)) = (out_n.last(), out_w.last_mut()) {
                let scale = last.abs().max(x.abs()).max(R::min_positive_value());
                if (x - *last).abs() <= tol * scale {
                    *lw += w;
                    continue;
                }
            }
            out_n.push(x);
            out_w.push(w);
        }
        Ok(Self { nodes: out_n, weights: out_w })
    }

    pub fn nodes(&self) -> &[R] {
        &self.nodes
    }

    pub fn weights(&self) -> &[R] {
        &self.weights
    }

    pub fn total_mass(&self) -> R {
        self.weights.iter().copied().sum()
    }

    /// `∫ f dμ`.
    pub fn integrate(&self, mut f: impl FnMut(R) -> R) -> R {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// `m_0..m_kmax`.
    pub fn moments(&self, kmax: usize) -> MomentSequence<R> {
        let mut values = vec![R::zero(); kmax + 1];
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            let mut p = w;
            for v in values.iter_mut() {
                *v += p;
                p *= x;
            }
        }
        MomentSequence { values }
    }
}

/// Moments `m_0..m_K` of a measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentSequence<R> {
    pub values: Vec<R>,
}

impl<R: Real> MomentSequence<R> {
    pub fn new(values: Vec<R>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("moment sequence must contain m_0"));
        }
        Ok(Self { values })
    }

    /// Highest available moment order `K`.
    pub fn order(&self) -> usize {
        self.values.len() - 1
    }
}

/// `m_k = f₁ᵀ T^k f₁` for `k = 0..=kmax`.
pub fn moments_from_jacobi<R: Real>(t: &JacobiMatrix<R>, kmax: usize) -> MomentSequence<R> {
    let n = t.n();
    let mut v = vec![R::zero(); n];
    let mut w = vec![R::zero(); n];
    v[0] = R::one();
    let mut values = Vec::with_capacity(kmax + 1);
    values.push(R::one());
    for _ in 0..kmax {
        t.mul_vec(&v, &mut w);
        std::mem::swap(&mut v, &mut w);
        values.push(v[0]);
    }
    MomentSequence { values }
}

fn hankel<R: Real>(m: &[R], size: usize, shift_last: bool) -> Vec<Vec<R>> {
    (0..size)
        .map(|i| {
            (0..size)
                .map(|j| if shift_last && j + 1 == size { m[i + j + 1] } else { m[i + j] })
                .collect()
        })
        .collect()
}

fn det_partial_pivot<R: Real>(mut a: Vec<Vec<R>>) -> R {
    let n = a.len();
    let mut det = R::one();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).expect("finite"))
            .expect("nonempty");
        if a[p][c] == R::zero() {
            return R::zero();
        }
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        det *= a[c][c];
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                let v = a[c][k];
                a[r][k] -= f * v;
            }
        }
    }
    det
}

/// `D_n = det (m_{i+j})_{i,j=0..n}` for `n = 0..=nmax`.
///
/// Leading minors are read off one elimination pass. A pivot below
/// `1e-12 · m_{2n}` in magnitude is treated as zero, after which every
/// higher determinant is zero as well.
pub fn hankel_determinants<R: Real>(m: &MomentSequence<R>, nmax: usize) -> Result<Vec<R>> {
    let needed = 2 * nmax;
    if m.order() < needed {
        return Err(Error::InsufficientMoments { needed: needed + 1, available: m.values.len() });
    }
    let size = nmax + 1;
    let mut a = hankel(&m.values, size, false);
    let tol = R::lit(1e-12);
    let mut out = Vec::with_capacity(size);
    let mut det = R::one();
    for c in 0..size {
        let pivot = a[c][c];
        let scale = m.values[2 * c].abs().max(R::min_positive_value());
        if pivot.abs() <= tol * scale {
            out.resize(size, R::zero());
            break;
        }
        det *= pivot;
        out.push(det);
        for r in c + 1..size {
            let f = a[r][c] / pivot;
            for k in c..size {
                let v = a[c][k];
                a[r][k] -= f * v;
            }
        }
    }
    Ok(out)
}

/// Recurrence coefficients of the measure with moments `m`, via
/// `b_n² = D_{n-1} D_{n+1} / D_n²` and `a_n = Δ_n/D_n − Δ_{n-1}/D_{n-1}`,
/// where `Δ_n` is `D_n` with its last column shifted by one moment.
///
/// The size is as large as the available moments allow and stops at the
/// first vanishing determinant (a measure with that many atoms).
pub fn jacobi_from_moments<R: Real>(m: &MomentSequence<R>) -> Result<JacobiMatrix<R>> {
    let k = m.order();
    if k < 1 {
        return Err(Error::InsufficientMoments { needed: 2, available: m.values.len() });
    }
    let nmax = k / 2;
    let d = hankel_determinants(m, nmax)?;
    if !(d[0] > R::zero()) {
        return Err(Error::NotAMomentSequence { order: 0 });
    }
    if let Some(j) = d.iter().position(|v| *v < R::zero()) {
        return Err(Error::NotAMomentSequence { order: j });
    }
    let dm = |n: isize| if n < 0 { R::one() } else { d[n as usize] };
    let mut diag = Vec::new();
    let mut off = Vec::new();
    let mut prev_ratio = R::zero();
    let mut n = 0usize;
    loop {
        if 2 * n + 1 > k {
            break;
        }
        let delta = det_partial_pivot(hankel(&m.values, n + 1, true));
        let ratio = delta / d[n];
        diag.push(ratio - prev_ratio);
        prev_ratio = ratio;
        if n + 1 > nmax || d[n + 1] == R::zero() || 2 * (n + 1) + 1 > k {
            break;
        }
        let b2 = dm(n as isize - 1) * d[n + 1] / (d[n] * d[n]);
        off.push(b2.sqrt());
        n += 1;
    }
    JacobiMatrix::new(diag, off)
}

fn check_k<R: Real>(t: &JacobiMatrix<R>, k: usize) -> Result<()> {
    if k > t.n() {
        return Err(Error::OutOfRange { index: k, size: t.n() });
    }
    Ok(())
}

/// `π_k(x)` for the monic polynomials of `T`.
pub fn monic_pi_at<R: Real>(t: &JacobiMatrix<R>, k: usize, x: R) -> Result<R> {
    Ok(monic_pi_with_derivative(t, k, x)?.0)
}

/// `(π_k(x), π_k'(x))` via the recurrence and its derivative.
pub fn monic_pi_with_derivative<R: Real>(t: &JacobiMatrix<R>, k: usize, x: R) -> Result<(R, R)> {
    check_k(t, k)?;
    let (a, b) = (t.diag(), t.offdiag());
    let (mut p, mut p_prev) = (R::one(), R::zero());
    let (mut dp, mut dp_prev) = (R::zero(), R::zero());
    for n in 0..k {
        let b2 = if n == 0 { R::zero() } else { b[n - 1] * b[n - 1] };
        let p_next = (x - a[n]) * p - b2 * p_prev;
        let dp_next = p + (x - a[n]) * dp - b2 * dp_prev;
        p_prev = p;
        p = p_next;
        dp_prev = dp;
        dp = dp_next;
    }
    Ok((p, dp))
}

/// `(p_k(x), p_k'(x))` for the orthonormal polynomials `p_k = π_k / ∏_{j<k} b_j`,
/// `k < n`.
pub fn orthonormal_with_derivative<R: Real>(t: &JacobiMatrix<R>, k: usize, x: R) -> Result<(R, R)> {
    if k >= t.n() {
        return Err(Error::OutOfRange { index: k, size: t.n() });
    }
    let (p, dp) = monic_pi_with_derivative(t, k, x)?;
    let norm = t.offdiag()[..k].iter().fold(R::one(), |acc, &b| acc * b);
    Ok((p / norm, dp / norm))
}

/// `c_0(0)..c_kmax(0)` where `c_k(z) = ∫ π_k(λ)/(λ − z) μ(dλ)`.
///
/// Seeded with `c_{-1} = -1`, `b_{-1} = 1` and `c_0(0) = f₁ᵀ T⁻¹ f₁` taken
/// from the Cholesky factor `H`.
pub fn stieltjes_c_at_zero<R: Real>(t: &JacobiMatrix<R>, h: &BidiagonalFactor<R>, kmax: usize) -> Result<Vec<R>> {
    check_k(t, kmax)?;
    if h.n() != t.n() {
        return Err(Error::invalid("factor and Jacobi matrix differ in size"));
    }
    let c0 = inverse_first_entry(h).map_err(|_| Error::Degenerate("singular Jacobi matrix".into()))?;
    let (a, b) = (t.diag(), t.offdiag());
    let mut out = Vec::with_capacity(kmax + 1);
    out.push(c0);
    let (mut c, mut c_prev) = (c0, -R::one());
    for n in 0..kmax {
        let b2 = if n == 0 { R::one() } else { b[n - 1] * b[n - 1] };
        let next = -a[n] * c - b2 * c_prev;
        c_prev = c;
        c = next;
        out.push(c);
    }
    Ok(out)
}

/// `π̃_k(0)`: the same recurrence at `x = 0` seeded with `(π̃_0, π̃_{-1}) = (0, 1)`
/// and `b_{-1} = 1`, so that `c_k(0) = c_0(0) π_k(0) − π̃_k(0)`.
pub fn complementary_pi_at_zero<R: Real>(t: &JacobiMatrix<R>, k: usize) -> Result<R> {
    check_k(t, k)?;
    let (a, b) = (t.diag(), t.offdiag());
    let (mut p, mut p_prev) = (R::zero(), R::one());
    for n in 0..k {
        let b2 = if n == 0 { R::one() } else { b[n - 1] * b[n - 1] };
        let next = -a[n] * p - b2 * p_prev;
        p_prev = p;
        p = next;
    }
    Ok(p)
}

/// The spectral measure of `(T, f₁)`: eigenvalues with squared first
/// eigenvector components.
pub fn spectral_measure<R: Real>(t: &JacobiMatrix<R>) -> Result<SpectralMeasure<R>> {
    let (vals, first) = symmetric_tridiagonal_eigen(t.diag(), t.offdiag())?;
    let weights = first.iter().map(|z| *z * *z).collect();
    SpectralMeasure::new(vals, weights)
}

/// `Σ_{j≤k} p_j(0)²` from the Christoffel–Darboux kernel
/// `b_k [p'_{k+1}(0) p_k(0) − p'_k(0) p_{k+1}(0)]`.
pub fn christoffel_darboux_at_zero<R: Real>(t: &JacobiMatrix<R>, k: usize) -> Result<R> {
    if k + 1 >= t.n() {
        return Err(Error::OutOfRange { index: k + 1, size: t.n() });
    }
    let (pk, dpk) = orthonormal_with_derivative(t, k, R::zero())?;
    let (pk1, dpk1) = orthonormal_with_derivative(t, k + 1, R::zero())?;
    Ok(t.offdiag()[k] * (dpk1 * pk - dpk * pk1))
}

/// MINRES residual norms `‖r_k‖₂` for `k = 0..=kmax` from the
/// Christoffel–Darboux route: `‖r_k‖⁻² = Σ_{j≤k} p_j(0)²`.
pub fn minres_residuals_cd<R: Real>(t: &JacobiMatrix<R>, kmax: usize) -> Result<Vec<R>> {
    (0..=kmax)
        .map(|k| {
            let s = if k + 1 < t.n() {
                christoffel_darboux_at_zero(t, k)?
            } else {
                let mut acc = R::zero();
                for j in 0..=k {
                    let (p, _) = orthonormal_with_derivative(t, j, R::zero())?;
                    acc += p * p;
                }
                acc
            };
            Ok(R::one() / s.sqrt())
        })
        .collect()
}
