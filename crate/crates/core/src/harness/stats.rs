//! Sample statistics, KS distances and the rescaled fluctuation statistic.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Minimum sample size accepted by [`gaussianity_check`].
pub const MIN_GAUSSIANITY_SAMPLES: usize = 10_000;

/// Mean and unbiased variance, summed in input order.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Which quantity the rescaled statistic is formed from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rescale {
    /// The norm, i.e. the square root of the traced squared quantity.
    #[default]
    Norm,
    /// The traced squared quantity itself.
    Squared,
}

/// `√M (s_i / ⟨s⟩ − 1)` with `⟨s⟩` the sample mean, where `s_i` is either
/// the traced value or its square root.
pub fn rescaled(xs: &[f64], m: usize, how: Rescale) -> Vec<f64> {
    let s: Vec<f64> = match how {
        Rescale::Norm => xs.iter().map(|x| x.sqrt()).collect(),
        Rescale::Squared => xs.to_vec(),
    };
    let (mean, _) = mean_var(&s);
    let sm = (m as f64).sqrt();
    s.iter().map(|v| sm * (v / mean - 1.0)).collect()
}

fn sorted(xs: &[f64]) -> Result<Vec<f64>> {
    if xs.iter().any(|x| x.is_nan()) {
        return Err(Error::invalid("sample contains NaN"));
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Two-sample Kolmogorov–Smirnov statistic `sup |F_a − F_b|`.
pub fn two_sample_ks(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("KS needs two nonempty samples"));
    }
    let (a, b) = (sorted(a)?, sorted(b)?);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// One-sample KS distance between a sample and a continuous CDF.
pub fn ks_against(xs: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::invalid("KS needs a nonempty sample"));
    }
    let v = sorted(xs)?;
    let n = v.len() as f64;
    Ok(v.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    }))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianityReport {
    pub samples: usize,
    pub mean: f64,
    pub variance: f64,
    /// Variance used to standardize.
    pub reference_variance: f64,
    pub ks: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

/// Centers at the sample mean, scales by `predicted_variance` (or the sample
/// variance when absent) and measures the KS distance to `N(0, 1)`.
pub fn gaussianity_check(samples: &[f64], predicted_variance: Option<f64>) -> Result<GaussianityReport> {
    if samples.len() < MIN_GAUSSIANITY_SAMPLES {
        return Err(Error::invalid(format!(
            "gaussianity check needs at least {MIN_GAUSSIANITY_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    let (mean, variance) = mean_var(samples);
    if !(variance > 0.0) {
        return Err(Error::Degenerate("sample has zero variance".into()));
    }
    let reference_variance = match predicted_variance {
        Some(v) if v > 0.0 && v.is_finite() => v,
        Some(v) => return Err(Error::invalid(format!("predicted variance must be positive, got {v}"))),
        None => variance,
    };
    let n = samples.len() as f64;
    let (mut m3, mut m4) = (0.0, 0.0);
    for x in samples {
        let c = x - mean;
        m3 += c * c * c;
        m4 += c * c * c * c;
    }
    let m2 = variance * (n - 1.0) / n;
    let skewness = m3 / n / m2.powf(1.5);
    let excess_kurtosis = m4 / n / (m2 * m2) - 3.0;
    let sd = reference_variance.sqrt();
    let z: Vec<f64> = samples.iter().map(|x| (x - mean) / sd).collect();
    let normal = Normal::standard();
    let ks = ks_against(&z, |x| normal.cdf(x))?;
    Ok(GaussianityReport { samples: samples.len(), mean, variance, reference_variance, ks, skewness, excess_kurtosis })
}
