//! Small dense kernels and the matrix-free operator interface.

use num_traits::{Float, One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{Real, Scalar};

/// Self-adjoint linear operator presented matrix-free.
pub trait LinearOperator<S: Scalar> {
    fn dim(&self) -> usize;
    /// `y <- A x`. Both slices have length `dim()`.
    fn apply(&self, x: &[S], y: &mut [S]);
}

impl<S: Scalar, T: LinearOperator<S> + ?Sized> LinearOperator<S> for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&self, x: &[S], y: &mut [S]) {
        (**self).apply(x, y)
    }
}

/// Wraps a closure as an operator.
pub struct FnOperator<F> {
    pub dim: usize,
    pub f: F,
}

impl<S: Scalar, F: Fn(&[S], &mut [S])> LinearOperator<S> for FnOperator<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn apply(&self, x: &[S], y: &mut [S]) {
        (self.f)(x, y)
    }
}

/// Diagonal operator `diag(d)`.
#[derive(Clone, Debug)]
pub struct Diagonal<R>(pub Vec<R>);

impl<R: Real + Scalar<Real = R>> LinearOperator<R> for Diagonal<R> {
    fn dim(&self) -> usize {
        self.0.len()
    }
    fn apply(&self, x: &[R], y: &mut [R]) {
        for ((yi, &xi), &di) in y.iter_mut().zip(x).zip(&self.0) {
            *yi = di * xi;
        }
    }
}

// ---------------------------------------------------------------------------
// vector helpers

/// `x^* y`.
#[inline]
pub fn dot<S: Scalar>(x: &[S], y: &[S]) -> S {
    let mut acc = S::zero();
    for (&a, &b) in x.iter().zip(y) {
        acc += a.conj() * b;
    }
    acc
}

/// Squared 2-norm with compensated summation.
pub fn norm_sq<S: Scalar>(x: &[S]) -> S::Real {
    let mut sum = S::Real::zero();
    let mut c = S::Real::zero();
    for &v in x {
        let y = v.abs_sq() - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

pub fn norm<S: Scalar>(x: &[S]) -> S::Real {
    norm_sq(x).sqrt()
}

/// `y <- y + a x`.
#[inline]
pub fn axpy<S: Scalar>(a: S, x: &[S], y: &mut [S]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[inline]
pub fn scale_in_place<S: Scalar>(x: &mut [S], r: S::Real) {
    for v in x {
        *v = v.scale(r);
    }
}

// ---------------------------------------------------------------------------
// dense matrices

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![S::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<S>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [S] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<S> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// `y <- A x`.
    pub fn mul_vec(&self, x: &[S], y: &mut [S]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(y.len(), self.rows);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = unconj_dot(self.row(i), x);
        }
    }

    /// `y <- A^* x`.
    pub fn adjoint_mul_vec(&self, x: &[S], y: &mut [S]) {
        assert_eq!(x.len(), self.rows);
        assert_eq!(y.len(), self.cols);
        y.iter_mut().for_each(|v| *v = S::zero());
        for (i, &xi) in x.iter().enumerate() {
            for (yj, &a) in y.iter_mut().zip(self.row(i)) {
                *yj += a.conj() * xi;
            }
        }
    }

    /// Dense `A A^* · s`.
    pub fn gram(&self, s: S::Real) -> Matrix<S> {
        let n = self.rows;
        let mut g = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = dot(self.row(j), self.row(i)).scale(s);
                g[(i, j)] = v;
                g[(j, i)] = v.conj();
            }
        }
        g
    }

    pub fn transpose_conj(&self) -> Matrix<S> {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }
}

impl<S> std::ops::Index<(usize, usize)> for Matrix<S> {
    type Output = S;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.cols + j]
    }
}

impl<S> std::ops::IndexMut<(usize, usize)> for Matrix<S> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.cols + j]
    }
}

impl<S: Scalar> LinearOperator<S> for Matrix<S> {
    fn dim(&self) -> usize {
        self.rows
    }
    fn apply(&self, x: &[S], y: &mut [S]) {
        self.mul_vec(x, y)
    }
}

/// `Σ a_i b_i` with eight independent partial sums.
fn unconj_dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    let mut acc = [S::zero(); 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (u, v) in ca.zip(cb) {
        for l in 0..8 {
            acc[l] += u[l] * v[l];
        }
    }
    let mut tail = S::zero();
    for (&u, &v) in ra.iter().zip(rb) {
        tail += u * v;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

/// `W = s · X X^*` applied as `y = s · X (X^* v)`, never densified.
pub struct GramOperator<'a, S: Scalar> {
    x: &'a Matrix<S>,
    scale: S::Real,
}

impl<'a, S: Scalar> GramOperator<'a, S> {
    /// Operator `X X^* · scale`.
    pub fn new(x: &'a Matrix<S>, scale: S::Real) -> Self {
        Self { x, scale }
    }

    /// `W = X X^*` for a data matrix whose entries already carry the
    /// `E|X_ij|² = 1/M` normalization.
    pub fn sample_covariance(x: &'a Matrix<S>) -> Self {
        Self::new(x, S::Real::one())
    }

    pub fn data(&self) -> &Matrix<S> {
        self.x
    }
}

impl<S: Scalar> LinearOperator<S> for GramOperator<'_, S> {
    fn dim(&self) -> usize {
        self.x.rows()
    }

    fn apply(&self, v: &[S], y: &mut [S]) {
        let mut t = vec![S::zero(); self.x.cols()];
        self.x.adjoint_mul_vec(v, &mut t);
        scale_in_place(&mut t, self.scale);
        self.x.mul_vec(&t, y);
    }
}

/// Cholesky factor `A = L L^*` of a Hermitian positive definite matrix,
/// stored as a lower triangle.
#[derive(Clone, Debug)]
pub struct DenseCholesky<S> {
    l: Matrix<S>,
}

impl<S: Scalar> DenseCholesky<S> {
    pub fn factor(a: &Matrix<S>) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::invalid("cholesky needs a square matrix"));
        }
        let mut l = Matrix::<S>::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)].re();
            for k in 0..j {
                d -= l[(j, k)].abs_sq();
            }
            if !(d > S::Real::zero()) {
                return Err(Error::NotPositiveDefinite { step: j, pivot: d.to_f64_lossy() });
            }
            let djj = d.sqrt();
            l[(j, j)] = S::from_real(djj);
            let inv = S::Real::one() / djj;
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s.scale(inv);
            }
        }
        Ok(Self { l })
    }

    pub fn solve(&self, b: &[S]) -> Vec<S> {
        let n = self.l.rows();
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[(i, k)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.l[(k, i)].conj() * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        y
    }
}

/// Eigenvalues of the real symmetric tridiagonal matrix with diagonal `diag`
/// and off-diagonal `off`, together with the first component of each
/// normalized eigenvector. Implicit QL with Wilkinson-type shifts; only the
/// first row of the eigenvector matrix is accumulated. Output is unsorted.
pub fn symmetric_tridiagonal_eigen<R: Real>(diag: &[R], off: &[R]) -> Result<(Vec<R>, Vec<R>)> {
    let n = diag.len();
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    if off.len() + 1 != n {
        return Err(Error::invalid("off-diagonal must have length n-1"));
    }
    let mut d = diag.to_vec();
    let mut e: Vec<R> = off.iter().copied().chain(std::iter::once(R::zero())).collect();
    let mut z = vec![R::zero(); n];
    z[0] = R::one();
    let two = R::lit(2.0);
    let eps = R::epsilon();

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= eps * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 * n.max(1) {
                return Err(Error::Degenerate("tridiagonal QL failed to converge".into()));
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(R::one());
            g = d[m] - d[l] + e[l] / (g + r.abs().copysign(g));
            let (mut s, mut c, mut p) = (R::one(), R::one(), R::zero());
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == R::zero() {
                    d[i + 1] -= p;
                    e[m] = R::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let zf = z[i + 1];
                z[i + 1] = s * z[i] + c * zf;
                z[i] = c * z[i] - s * zf;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = R::zero();
        }
    }
    Ok((d, z))
}

/// Solve the real symmetric tridiagonal system `T x = rhs` (Thomas algorithm,
/// no pivoting; intended for positive definite `T`).
pub fn tridiagonal_solve<R: Real>(diag: &[R], off: &[R], rhs: &[R]) -> Result<Vec<R>> {
    let n = diag.len();
    if rhs.len() != n || off.len() + 1 != n.max(1) {
        return Err(Error::invalid("dimension mismatch in tridiagonal solve"));
    }
    let mut c = vec![R::zero(); n];
    let mut x = rhs.to_vec();
    let mut denom = diag[0];
    for i in 0..n {
        if i > 0 {
            denom = diag[i] - off[i - 1] * c[i - 1];
            x[i] = x[i] - off[i - 1] * x[i - 1];
        }
        if denom == R::zero() {
            return Err(Error::NotPositiveDefinite { step: i, pivot: 0.0 });
        }
        if i + 1 < n {
            c[i] = off[i] / denom;
        }
        x[i] /= denom;
    }
    for i in (0..n.saturating_sub(1)).rev() {
        x[i] = x[i] - c[i] * x[i + 1];
    }
    Ok(x)
}
