//! Closed-form large-`M` predictions: the Marchenko–Pastur law, leading-order
//! limits, fluctuation variances, limit processes, halting times and exact
//! finite-size expectations.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::ensembles::BetaField;
use crate::error::{Error, Result};

/// The traced solver statistic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// CG, `‖e_k‖_W²`.
    CgError,
    /// CG, `‖r_k‖₂²`.
    CgResidual,
    /// MINRES, `‖r_k‖₂²`.
    MinresResidual,
    /// CG on the normal equations, `‖e_k‖_W² / ‖e_0‖_W²`.
    CgneRelative,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] =
        [Algorithm::CgError, Algorithm::CgResidual, Algorithm::MinresResidual, Algorithm::CgneRelative];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::CgError => "cg_error",
            Algorithm::CgResidual => "cg_residual",
            Algorithm::MinresResidual => "minres_residual",
            Algorithm::CgneRelative => "cgne_relative",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "cg_error" => Ok(Algorithm::CgError),
            "cg_residual" | "cg" => Ok(Algorithm::CgResidual),
            "minres_residual" | "minres" => Ok(Algorithm::MinresResidual),
            "cgne_relative" | "cgne" => Ok(Algorithm::CgneRelative),
            other => Err(Error::Parse(format!("unknown algorithm '{other}'"))),
        }
    }
}

fn check_ratio(d: f64, allow_one: bool) -> Result<()> {
    let ok = d > 0.0 && (d < 1.0 || (allow_one && d == 1.0));
    if !ok || !d.is_finite() {
        return Err(Error::invalid(format!(
            "d must lie in (0, 1{}, got {d}",
            if allow_one { "]" } else { ")" }
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Marchenko–Pastur

/// Spectral edges `γ± = (1 ± √d)²`.
pub fn mp_edges(d: f64) -> Result<(f64, f64)> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::invalid(format!("d must be positive, got {d}")));
    }
    let s = d.sqrt();
    Ok(((1.0 - s).powi(2), (1.0 + s).powi(2)))
}

/// Marchenko–Pastur law with ratio `d ∈ (0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MpLaw {
    pub d: f64,
    pub gamma_minus: f64,
    pub gamma_plus: f64,
}

impl MpLaw {
    pub fn new(d: f64) -> Result<Self> {
        check_ratio(d, true)?;
        let (gamma_minus, gamma_plus) = mp_edges(d)?;
        Ok(Self { d, gamma_minus, gamma_plus })
    }

    pub fn density(&self, x: f64) -> f64 {
        if x <= self.gamma_minus || x >= self.gamma_plus || x <= 0.0 {
            return 0.0;
        }
        ((self.gamma_plus - x) * (x - self.gamma_minus)).sqrt() / (2.0 * std::f64::consts::PI * self.d * x)
    }

    /// `∫ f dρ_d` by the midpoint rule in `θ` after `x = 1 + d + 2√d cos θ`,
    /// which turns the square-root edges into a smooth periodic integrand.
    fn quad(&self, n: usize, f: impl Fn(f64) -> Complex64) -> Complex64 {
        let c = 1.0 + self.d;
        let h = 2.0 * self.d.sqrt();
        let step = std::f64::consts::PI / n as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            let th = (i as f64 + 0.5) * step;
            let (s, co) = th.sin_cos();
            let x = c + h * co;
            // ρ(x) dx = h² sin²θ / (2π d x) dθ
            let w = h * h * s * s / (2.0 * std::f64::consts::PI * self.d * x);
            acc += f(x) * w;
        }
        acc * step
    }

    fn adaptive(&self, f: impl Fn(f64) -> Complex64) -> Complex64 {
        let mut n = 64;
        let mut prev = self.quad(n, &f);
        loop {
            n *= 2;
            let cur = self.quad(n, &f);
            let scale = cur.norm().max(1e-300);
            if (cur - prev).norm() <= 1e-14 * scale || n >= 1 << 22 {
                return cur;
            }
            prev = cur;
        }
    }

    /// `∫ ρ_d(dλ)` ; equals 1.
    pub fn total_mass(&self) -> f64 {
        self.adaptive(|_| Complex64::new(1.0, 0.0)).re
    }

    /// `∫ λ^k ρ_d(dλ)` by quadrature.
    pub fn moment(&self, k: u32) -> f64 {
        self.adaptive(|x| Complex64::new(x.powi(k as i32), 0.0)).re
    }

    /// `s_d(z) = ∫ ρ_d(dλ) / (λ − z)` for `z` off the support.
    pub fn stieltjes(&self, z: Complex64) -> Result<Complex64> {
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::invalid("z must be finite"));
        }
        if z.im == 0.0 && z.re >= self.gamma_minus && z.re <= self.gamma_plus {
            return Err(Error::OnSupport(format!("{z}")));
        }
        Ok(self.adaptive(|x| Complex64::new(1.0, 0.0) / (Complex64::new(x, 0.0) - z)))
    }
}

pub fn mp_density(x: f64, d: f64) -> Result<f64> {
    Ok(MpLaw::new(d)?.density(x))
}

pub fn mp_stieltjes(z: Complex64, d: f64) -> Result<Complex64> {
    MpLaw::new(d)?.stieltjes(z)
}

// ---------------------------------------------------------------------------
// leading order and fluctuations

/// `(1 − d) / (1 − d^{k+1})`, continuous at `d = 1` where it equals `1/(k+1)`.
fn minres_factor(d: f64, k: usize) -> f64 {
    let e = 1.0 - d;
    if e.abs() < 1e-8 {
        let k1 = (k + 1) as f64;
        // 1 − (1−e)^{k+1} = (k+1)e − C(k+1,2)e² + C(k+1,3)e³ − …
        let c2 = k1 * (k1 - 1.0) / 2.0;
        let c3 = c2 * (k1 - 2.0) / 3.0;
        1.0 / (k1 - c2 * e + c3 * e * e)
    } else {
        e / (1.0 - d.powi(k as i32 + 1))
    }
}

/// Large-`M` limit of the traced statistic at step `k`.
pub fn leading_order(alg: Algorithm, d: f64, k: usize) -> Result<f64> {
    check_ratio(d, true)?;
    let dk = d.powi(k as i32);
    match alg {
        Algorithm::CgResidual => Ok(dk),
        Algorithm::CgError => {
            if d == 1.0 {
                return Err(Error::invalid("the CG error limit is undefined at d = 1"));
            }
            Ok(dk / (1.0 - d))
        }
        Algorithm::MinresResidual | Algorithm::CgneRelative => Ok(dk * minres_factor(d, k)),
    }
}

/// Variance of the Gaussian limit of `√(βM/2)·(statistic − limit)`.
pub fn fluctuation_variance(alg: Algorithm, d: f64, k: usize) -> Result<f64> {
    check_ratio(d, false)?;
    let kf = k as f64;
    let d2k = d.powi(2 * k as i32);
    match alg {
        Algorithm::CgResidual => Ok(kf * d2k * (1.0 + 1.0 / d)),
        Algorithm::CgError => {
            Ok(d2k / (1.0 - d).powi(2) * (1.0 / (d * (1.0 - d)) + (kf - 1.0) * (1.0 + 1.0 / d) + 1.0))
        }
        Algorithm::MinresResidual | Algorithm::CgneRelative => {
            if k == 0 {
                return Ok(0.0);
            }
            let dk1 = d.powi(k as i32 + 1);
            let num = (1.0 - d)
                * d.powi(2 * k as i32 - 1)
                * (2.0 * dk1 + 2.0 * d * dk1 - dk1 * dk1 - d * d * (kf + 1.0) - 2.0 * d + kf);
            Ok(num / (1.0 - dk1).powi(4))
        }
    }
}

/// Default series truncation: `d^terms < 1e-10`.
pub fn default_truncation(d: f64) -> usize {
    ((1e-10f64).ln() / d.ln()).ceil().max(1.0) as usize
}

/// One joint draw of the limit process `(Z_k)_{k=0..=kmax}` from a single iid
/// standard normal sequence `Z_1, Z_2, …` (with `Z_0 = Z_{-1} = 0`). The
/// infinite series in the error process is cut after `truncation_terms` terms.
pub fn sample_limit_process<G: Rng + ?Sized>(
    alg: Algorithm,
    d: f64,
    kmax: usize,
    truncation_terms: Option<usize>,
    rng: &mut G,
) -> Result<Vec<f64>> {
    check_ratio(d, alg != Algorithm::CgError)?;
    let terms = truncation_terms.unwrap_or_else(|| if d < 1.0 { default_truncation(d) } else { 1 });
    let len = match alg {
        Algorithm::CgError => 2 * (kmax + terms) + 2,
        _ => 2 * kmax + 2,
    };
    let mut z = vec![0.0; len + 1];
    for v in z.iter_mut().skip(1) {
        *v = rng.sample(StandardNormal);
    }
    let sd = d.sqrt();
    // increments ξ_j = Z_{2j+2}/√d − Z_{2j+1}
    let xi = |j: usize| z[2 * j + 2] / sd - z[2 * j + 1];
    let cg: Vec<f64> = {
        let mut out = Vec::with_capacity(kmax + 1);
        let mut s = 0.0;
        out.push(0.0);
        for k in 1..=kmax {
            s += xi(k - 1);
            out.push(d.powi(k as i32) * s);
        }
        out
    };
    match alg {
        Algorithm::CgResidual => Ok(cg),
        Algorithm::MinresResidual | Algorithm::CgneRelative => Ok((0..=kmax)
            .map(|k| {
                let f = minres_factor(d, k);
                let s: f64 = (0..=k).map(|j| d.powi(2 * (k - j) as i32) * cg[j]).sum();
                f * f * s
            })
            .collect()),
        Algorithm::CgError => {
            let zi = |i: isize| if i <= 0 { 0.0 } else { z[i as usize] };
            Ok((0..=kmax)
                .map(|k| {
                    let mut tail = 0.0;
                    for j in k..k + terms {
                        tail += d.powi((j - k) as i32) * (zi(2 * j as isize) / sd - zi(2 * j as isize + 1));
                    }
                    let mut head = 0.0;
                    for j in 1..k {
                        head += zi(2 * j as isize) / sd - zi(2 * j as isize - 1);
                    }
                    d.powi(k as i32) / (1.0 - d) * (tail + head - zi(2 * k as isize - 1))
                })
                .collect())
        }
    }
}

// ---------------------------------------------------------------------------
// halting

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HaltingPrediction {
    pub iterations: usize,
    /// `ε` sits on the lattice of limiting values, where the limiting law of
    /// the halting time splits evenly between `iterations` and `iterations + 1`.
    pub boundary: bool,
}

/// Predicted halting time `min{k : statistic_k < ε}` in the large-`M` limit.
pub fn halting_prediction(alg: Algorithm, d: f64, eps: f64) -> Result<HaltingPrediction> {
    check_ratio(d, false)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid(format!("eps must lie in (0, 1), got {eps}")));
    }
    let e2 = eps * eps;
    let v = match alg {
        Algorithm::CgResidual => 2.0 * eps.ln() / d.ln(),
        Algorithm::CgError => (e2 * (1.0 - d)).ln() / d.ln(),
        Algorithm::MinresResidual | Algorithm::CgneRelative => (e2 / (1.0 - d + e2 * d)).ln() / d.ln(),
    };
    let r = v.round();
    let boundary = (v - r).abs() <= 1e-9 * v.abs().max(1.0);
    let iterations = if boundary { r } else { v.ceil() }.max(0.0) as usize;
    Ok(HaltingPrediction { iterations, boundary })
}

// ---------------------------------------------------------------------------
// finite-size expectations

/// `ln(Γ(x + ½) / Γ(x))` for `x > 0`, without forming either Gamma value.
pub fn ln_gamma_half_ratio(x: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let mut shift = 0.0;
    let mut y = x;
    while y < 24.0 {
        // R(y) = R(y+1) · y / (y + ½)
        shift += (y / (y + 0.5)).ln();
        y += 1.0;
    }
    let inv = 1.0 / y;
    let inv2 = inv * inv;
    let series = 0.5 * y.ln() - inv / 8.0 + inv * inv2 / 192.0 - inv * inv2 * inv2 / 640.0
        + 17.0 * inv * inv2 * inv2 * inv2 / 14336.0;
    series + shift
}

/// Exact `E‖r_k‖₂` and `E‖e_k‖_W` for `k = 0..=kmax` on the Gaussian ensemble
/// with a unit right-hand side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpectedNorms {
    pub residual: Vec<f64>,
    pub error: Vec<f64>,
}

pub fn expected_norms_gamma(beta: BetaField, n: usize, m: usize, kmax: usize) -> Result<ExpectedNorms> {
    if n == 0 || n > m {
        return Err(Error::invalid(format!("need 1 <= n <= m, got n={n} m={m}")));
    }
    if kmax >= n {
        return Err(Error::OutOfRange { index: kmax, size: n });
    }
    let b = beta.as_f64();
    let (nf, mf) = (n as f64, m as f64);
    let mdof = b * (mf - nf + 1.0);
    let log_sigma = 0.5 * (0.5 * b * mf).ln() - ln_gamma_half_ratio((mdof - 1.0) / 2.0);
    let mut log_r = 0.0;
    let mut residual = Vec::with_capacity(kmax + 1);
    let mut error = Vec::with_capacity(kmax + 1);
    for k in 0..=kmax {
        if k > 0 {
            let j = (k - 1) as f64;
            log_r += ln_gamma_half_ratio(b * (nf - j - 1.0) / 2.0) - ln_gamma_half_ratio((b * (mf - j) - 1.0) / 2.0);
        }
        residual.push(log_r.exp());
        error.push((log_r + log_sigma).exp());
    }
    Ok(ExpectedNorms { residual, error })
}

/// Operative variance of the rescaled residual statistic in the demonstration
/// table: `k/2 · (1 + 1/d)`.
pub fn table1_prediction(d: f64, k: usize) -> Result<f64> {
    check_ratio(d, false)?;
    if k < 1 {
        return Err(Error::invalid("k must be >= 1"));
    }
    Ok(k as f64 / 2.0 * (1.0 + 1.0 / d))
}

/// Predicted variance of `√M (s/⟨s⟩ − 1)` where `s` is the traced squared
/// statistic (`squared = true`) or its square root (`squared = false`).
pub fn predicted_rescaled_variance(alg: Algorithm, beta: BetaField, d: f64, k: usize, squared: bool) -> Result<f64> {
    let mean = leading_order(alg, d, k)?;
    let var = fluctuation_variance(alg, d, k)?;
    let rel = var / (mean * mean);
    let b = beta.as_f64();
    Ok(if squared { 2.0 * rel / b } else { rel / (2.0 * b) })
}

/// Leading-order values and fluctuation variances for one statistic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub algorithm: Algorithm,
    pub d: f64,
    pub leading: Vec<f64>,
    pub variance: Vec<f64>,
}

pub fn prediction_set(alg: Algorithm, d: f64, kmax: usize) -> Result<PredictionSet> {
    let leading = (0..=kmax).map(|k| leading_order(alg, d, k)).collect::<Result<_>>()?;
    let variance = (0..=kmax).map(|k| fluctuation_variance(alg, d, k)).collect::<Result<_>>()?;
    Ok(PredictionSet { algorithm: alg, d, leading, variance })
}
