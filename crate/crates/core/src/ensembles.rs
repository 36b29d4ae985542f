//! Random data matrices, right-hand sides and chi variates.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use num_traits::{Float, One, Zero};

use crate::error::{Error, Result};
use crate::linalg::{norm, scale_in_place, Matrix};
use crate::scalar::{Real, Scalar};

/// Dyson index: 1 for real entries, 2 for complex entries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct BetaField(u8);

impl BetaField {
    pub const REAL: BetaField = BetaField(1);
    pub const COMPLEX: BetaField = BetaField(2);

    pub fn new(value: u8) -> Result<Self> {
        match value {
            1 | 2 => Ok(BetaField(value)),
            _ => Err(Error::invalid(format!("beta must be 1 or 2, got {value}"))),
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.0)
    }
}

impl TryFrom<u8> for BetaField {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        BetaField::new(v)
    }
}

impl From<BetaField> for u8 {
    fn from(b: BetaField) -> u8 {
        b.0
    }
}

impl Default for BetaField {
    fn default() -> Self {
        BetaField::REAL
    }
}

/// Entry law of the data matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    /// Standard (real or complex) normal entries.
    Gaussian,
    /// `0` with probability 2/3, `±√3` with probability 1/6 each.
    MomentMatch4,
    /// `±1` with probability 1/2 each.
    Bernoulli,
}

impl EnsembleKind {
    pub fn name(self) -> &'static str {
        match self {
            EnsembleKind::Gaussian => "gaussian",
            EnsembleKind::MomentMatch4 => "moment_match4",
            EnsembleKind::Bernoulli => "bernoulli",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub n: usize,
    pub m: usize,
    pub beta: BetaField,
}

impl EnsembleSpec {
    pub fn new(kind: EnsembleKind, n: usize, m: usize, beta: BetaField) -> Result<Self> {
        let spec = Self { kind, n, m, beta };
        spec.validate()?;
        Ok(spec)
    }

    pub fn gaussian(n: usize, m: usize, beta: BetaField) -> Result<Self> {
        Self::new(EnsembleKind::Gaussian, n, m, beta)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(Error::invalid("n and m must be positive"));
        }
        if self.n > self.m {
            return Err(Error::invalid(format!("need n <= m, got n={} m={}", self.n, self.m)));
        }
        if self.kind != EnsembleKind::Gaussian && self.beta != BetaField::REAL {
            return Err(Error::invalid(format!("{} entries require beta = 1", self.kind.name())));
        }
        Ok(())
    }

    /// Aspect ratio `d = N / M`.
    pub fn ratio(&self) -> f64 {
        self.n as f64 / self.m as f64
    }
}

/// Deterministic random stream keyed by `(seed, stream_id)`.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// A standard normal in the field of `S` (`E|z|² = 1`).
pub fn sample_normal<S: Scalar, G: Rng + ?Sized>(rng: &mut G) -> S {
    let re: f64 = rng.sample(StandardNormal);
    if S::BETA == 1 {
        S::from_real(S::Real::lit(re))
    } else {
        let im: f64 = rng.sample(StandardNormal);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        S::from_parts(S::Real::lit(re * h), S::Real::lit(im * h))
    }
}

fn check_field<S: Scalar>(spec: &EnsembleSpec) -> Result<()> {
    spec.validate()?;
    if S::BETA != spec.beta.value() {
        return Err(Error::invalid(format!(
            "scalar type has beta = {} but the ensemble asks for beta = {}",
            S::BETA,
            spec.beta.value()
        )));
    }
    Ok(())
}

/// Draws the `N x M` data matrix `X` with `E|X_ij|² = 1/M`.
pub fn sample_data_matrix<S: Scalar>(spec: &EnsembleSpec, rng: &mut RngStream) -> Result<Matrix<S>> {
    let mut x = Matrix::zeros(spec.n, spec.m);
    fill_data_matrix(spec, rng, &mut x)?;
    Ok(x)
}

/// As [`sample_data_matrix`], reusing the storage of `out`.
pub fn fill_data_matrix<S: Scalar>(spec: &EnsembleSpec, rng: &mut RngStream, out: &mut Matrix<S>) -> Result<()> {
    check_field::<S>(spec)?;
    if out.rows() != spec.n || out.cols() != spec.m {
        *out = Matrix::zeros(spec.n, spec.m);
    }
    let inv_sqrt_m = 1.0 / (spec.m as f64).sqrt();
    let data = out.as_mut_slice();
    match spec.kind {
        EnsembleKind::Gaussian => {
            let s = S::Real::lit(inv_sqrt_m);
            for v in data.iter_mut() {
                *v = sample_normal::<S, _>(rng).scale(s);
            }
        }
        EnsembleKind::MomentMatch4 => {
            let big = S::from_real(S::Real::lit(3f64.sqrt() * inv_sqrt_m));
            let zero = S::zero();
            for v in data.iter_mut() {
                *v = match rng.random_range(0u8..6) {
                    0 => big,
                    1 => -big,
                    _ => zero,
                };
            }
        }
        EnsembleKind::Bernoulli => {
            let one = S::from_real(S::Real::lit(inv_sqrt_m));
            for chunk in data.chunks_mut(64) {
                let bits = rng.next_u64();
                for (i, v) in chunk.iter_mut().enumerate() {
                    *v = if (bits >> i) & 1 == 1 { one } else { -one };
                }
            }
        }
    }
    Ok(())
}

/// One draw of `χ_dof`.
pub fn sample_chi<G: Rng + ?Sized>(dof: f64, rng: &mut G) -> Result<f64> {
    Ok(sample_chi_sq(dof, rng)?.sqrt())
}

/// One draw of `χ²_dof`.
pub fn sample_chi_sq<G: Rng + ?Sized>(dof: f64, rng: &mut G) -> Result<f64> {
    if !(dof > 0.0) || !dof.is_finite() {
        return Err(Error::invalid(format!("chi degrees of freedom must be positive, got {dof}")));
    }
    let g = Gamma::new(0.5 * dof, 2.0).map_err(|e| Error::invalid(e.to_string()))?;
    Ok(g.sample(rng))
}

/// How the right-hand side is chosen.
#[derive(Clone, Debug, PartialEq)]
pub enum Rhs<S> {
    /// `f₁ = (1, 0, ..., 0)`.
    FirstBasis,
    /// Uniform on the unit sphere of the field.
    RandomUnit,
    /// A given nonzero vector, normalized.
    Explicit(Vec<S>),
}

/// Unit-norm right-hand side of length `n`.
pub fn make_rhs<S: Scalar>(kind: &Rhs<S>, n: usize, rng: &mut RngStream) -> Result<Vec<S>> {
    if n == 0 {
        return Err(Error::invalid("right-hand side length must be positive"));
    }
    let mut b = match kind {
        Rhs::FirstBasis => {
            let mut b = vec![S::zero(); n];
            b[0] = S::one();
            return Ok(b);
        }
        Rhs::RandomUnit => (0..n).map(|_| sample_normal::<S, _>(rng)).collect::<Vec<_>>(),
        Rhs::Explicit(v) => {
            if v.len() != n {
                return Err(Error::invalid(format!("explicit rhs has length {}, expected {n}", v.len())));
            }
            v.clone()
        }
    };
    let nb = norm(&b);
    if !(nb > S::Real::zero()) || !nb.is_finite() {
        return Err(Error::invalid("right-hand side must be a nonzero finite vector"));
    }
    scale_in_place(&mut b, S::Real::one() / nb);
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn bernoulli_entries_have_fixed_modulus() {
        let spec = EnsembleSpec::new(EnsembleKind::Bernoulli, 2, 2, BetaField::REAL).unwrap();
        let x: Matrix<f64> = sample_data_matrix(&spec, &mut RngStream::new(11, 0)).unwrap();
        for &v in x.as_slice() {
            assert_eq!(v.abs(), 1.0 / 2f64.sqrt());
        }
    }

    #[test]
    fn moment_match4_support_and_fourth_moment() {
        let spec = EnsembleSpec::new(EnsembleKind::MomentMatch4, 1000, 1000, BetaField::REAL).unwrap();
        let x: Matrix<f64> = sample_data_matrix(&spec, &mut RngStream::new(3, 1)).unwrap();
        let s = (1000f64).sqrt();
        let mut m4 = 0.0;
        for &v in x.as_slice() {
            let y = v * s;
            assert!(y == 0.0 || (y.abs() - 3f64.sqrt()).abs() < 1e-12);
            m4 += y.powi(4);
        }
        m4 /= 1e6;
        assert!((m4 - 3.0).abs() < 0.02, "fourth moment {m4}");
    }

    #[test]
    fn gaussian_entries_center_and_scale() {
        let spec = EnsembleSpec::gaussian(1000, 1000, BetaField::REAL).unwrap();
        let x: Matrix<f64> = sample_data_matrix(&spec, &mut RngStream::new(5, 2)).unwrap();
        let s = (1000f64).sqrt();
        let mean = x.as_slice().iter().map(|v| v * s).sum::<f64>() / 1e6;
        let var = x.as_slice().iter().map(|v| (v * s).powi(2)).sum::<f64>() / 1e6;
        assert!(mean.abs() < 0.004, "mean {mean}");
        assert!((var - 1.0).abs() < 5.0 * (2.0f64 / 1e6).sqrt(), "var {var}");
    }

    #[test]
    fn complex_gaussian_parts_have_half_variance() {
        let spec = EnsembleSpec::gaussian(200, 500, BetaField::COMPLEX).unwrap();
        let x: Matrix<Complex64> = sample_data_matrix(&spec, &mut RngStream::new(9, 0)).unwrap();
        let n = x.as_slice().len() as f64;
        let re = x.as_slice().iter().map(|z| z.re * z.re).sum::<f64>() / n * 500.0;
        let im = x.as_slice().iter().map(|z| z.im * z.im).sum::<f64>() / n * 500.0;
        assert!((re - 0.5).abs() < 0.01 && (im - 0.5).abs() < 0.01, "{re} {im}");
    }

    #[test]
    fn field_mismatch_and_bad_combinations_rejected() {
        assert!(EnsembleSpec::new(EnsembleKind::Bernoulli, 2, 2, BetaField::COMPLEX).is_err());
        assert!(EnsembleSpec::gaussian(3, 2, BetaField::REAL).is_err());
        assert!(BetaField::new(4).is_err());
        let spec = EnsembleSpec::gaussian(2, 2, BetaField::COMPLEX).unwrap();
        assert!(sample_data_matrix::<f64>(&spec, &mut RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let spec = EnsembleSpec::gaussian(4, 6, BetaField::REAL).unwrap();
        let a: Matrix<f64> = sample_data_matrix(&spec, &mut RngStream::new(1, 7)).unwrap();
        let b: Matrix<f64> = sample_data_matrix(&spec, &mut RngStream::new(1, 7)).unwrap();
        let c: Matrix<f64> = sample_data_matrix(&spec, &mut RngStream::new(1, 8)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn chi_moments() {
        let mut rng = RngStream::new(21, 0);
        let n = 1_000_000;
        let mut sq = 0.0;
        for _ in 0..n {
            sq += sample_chi(2.0, &mut rng).unwrap().powi(2);
        }
        assert!((sq / n as f64 - 2.0).abs() < 0.01);
        let mut inv = 0.0;
        for _ in 0..n {
            inv += 1.0 / sample_chi_sq(6.0, &mut rng).unwrap();
        }
        assert!((inv / n as f64 - 0.25).abs() < 0.002);
        assert!(sample_chi(0.0, &mut rng).is_err());
        assert!(sample_chi(-1.0, &mut rng).is_err());
    }

    #[test]
    fn chi_one_is_half_normal() {
        use statrs::distribution::{ContinuousCDF, Normal};
        let mut rng = RngStream::new(4, 4);
        let mut v: Vec<f64> = (0..100_000).map(|_| sample_chi(1.0, &mut rng).unwrap()).collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let normal = Normal::new(0.0, 1.0).unwrap();
        let n = v.len() as f64;
        let mut ks: f64 = 0.0;
        for (i, &x) in v.iter().enumerate() {
            let f = 2.0 * normal.cdf(x) - 1.0;
            ks = ks.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
        }
        assert!(ks < 0.01, "ks {ks}");
    }

    #[test]
    fn rhs_examples() {
        let mut rng = RngStream::new(0, 0);
        assert_eq!(make_rhs::<f64>(&Rhs::FirstBasis, 3, &mut rng).unwrap(), vec![1.0, 0.0, 0.0]);
        let b = make_rhs(&Rhs::Explicit(vec![3.0f64, 4.0]), 2, &mut rng).unwrap();
        assert!((b[0] - 0.6).abs() < 1e-15 && (b[1] - 0.8).abs() < 1e-15);
        let r = make_rhs::<f64>(&Rhs::RandomUnit, 10_000, &mut rng).unwrap();
        assert!((norm(&r) - 1.0).abs() < 1e-12);
        assert!(make_rhs(&Rhs::Explicit(vec![0.0f64, 0.0]), 2, &mut rng).is_err());
    }
}
