//! Maximum-likelihood power-law fits and Kolmogorov-Smirnov goodness of fit.
//!
//! A spectrum is treated as `K` samples from the continuous density
//! `p(x) ∝ x^-beta` on `[x_min, ∞)`, with `x_min` set to the `K`-th largest
//! retained value. The rank-size (Zipf) slope is `s = 1 / (beta - 1)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spectrum::Spectrum;

/// Significance levels with tabulated critical coefficients `c(alpha)`;
/// the critical KS distance is `c(alpha) / sqrt(K)`.
pub const KS_COEFFICIENTS: [(f64, f64); 5] = [
    (0.2, 1.07),
    (0.15, 1.14),
    (0.1, 1.22),
    (0.05, 1.36),
    (0.01, 1.63),
];

pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_K: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit<T> {
    pub beta_hat: T,
    /// Standard error `(beta_hat - 1) / sqrt(K)`.
    pub sigma: T,
    /// Zipf slope `1 / (beta_hat - 1)`.
    pub s_hat: T,
    pub lambda_cutoff: T,
    pub k_samples: usize,
    /// `sum_{k <= n} k^-s_hat`, when computed.
    pub z_d: Option<T>,
}

impl<T: Scalar> PowerLawFit<T> {
    /// A fit with the given exponent; derived fields follow the usual conventions.
    pub fn new(beta_hat: T, lambda_cutoff: T, k_samples: usize) -> Result<Self> {
        if !(beta_hat > T::one()) || !beta_hat.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "power-law exponent must exceed 1, got {beta_hat}"
            )));
        }
        if !(lambda_cutoff > T::zero()) {
            return Err(Error::NonPositiveEigenvalue {
                index: k_samples.saturating_sub(1),
                value: lambda_cutoff.as_f64(),
            });
        }
        if k_samples == 0 {
            return Err(Error::InvalidCount("k_samples must be positive".into()));
        }
        let excess = beta_hat - T::one();
        Ok(Self {
            beta_hat,
            sigma: excess / T::of_usize(k_samples).sqrt(),
            s_hat: T::one() / excess,
            lambda_cutoff,
            k_samples,
            z_d: None,
        })
    }

    /// Fills in `z_d` for an `n`-term Zipf law with this fit's slope.
    pub fn with_zipf_normalizer(mut self, n: usize) -> Self {
        self.z_d = Some(zipf_normalizer(n, self.s_hat));
        self
    }

    /// Hypothesized CDF `1 - (x / x_min)^(1 - beta)`; zero below the cutoff.
    pub fn cdf(&self, x: T) -> T {
        if x <= self.lambda_cutoff {
            T::zero()
        } else {
            T::one() - (x / self.lambda_cutoff).powf(T::one() - self.beta_hat)
        }
    }

    /// Inverse of [`Self::cdf`] on `[0, 1)`.
    pub fn quantile(&self, u: T) -> T {
        self.lambda_cutoff * (T::one() - u).powf(-T::one() / (self.beta_hat - T::one()))
    }
}

/// MLE over the top `k` values of `s`, with `x_min = lambda_k`.
pub fn mle_fit<T: Scalar>(s: &Spectrum<T>, k: usize) -> Result<PowerLawFit<T>> {
    mle_fit_sorted(s.values(), k)
}

/// As [`mle_fit`] on a slice already sorted descending.
pub fn mle_fit_sorted<T: Scalar>(values: &[T], k: usize) -> Result<PowerLawFit<T>> {
    if k < 2 {
        return Err(Error::InsufficientLength(k));
    }
    if k > values.len() {
        return Err(Error::MismatchedFit {
            fit_k: k,
            available: values.len(),
        });
    }
    let top = &values[..k];
    if let Some(index) = top.iter().position(|v| !(*v > T::zero())) {
        return Err(Error::NonPositiveEigenvalue {
            index,
            value: top[index].as_f64(),
        });
    }
    let cutoff = top[k - 1];
    let log_sum = top
        .iter()
        .fold(T::zero(), |acc, v| acc + (*v / cutoff).ln());
    if !(log_sum > T::zero()) {
        return Err(Error::DegenerateSample);
    }
    let beta_hat = T::one() + T::of_usize(k) / log_sum;
    PowerLawFit::new(beta_hat, cutoff, k)
}

/// Tabulated critical KS distance `c(alpha) / sqrt(k)`.
pub fn critical_value(k: usize, alpha: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidCount("K must be positive".into()));
    }
    let (_, c) = KS_COEFFICIENTS
        .iter()
        .find(|(a, _)| (a - alpha).abs() < 1e-12)
        .ok_or(Error::UnsupportedAlpha(alpha))?;
    Ok(c / (k as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsVerdict<T> {
    pub d_ks: T,
    pub d_c: T,
    pub alpha: f64,
    pub k_samples: usize,
    /// `d_ks <= d_c`: the power-law hypothesis is not rejected at `alpha`.
    pub is_power_law: bool,
}

/// Exact sup-distance between the empirical CDF of `ascending` and `cdf`.
///
/// The empirical CDF is right-continuous, so at every sample both the step
/// value and its left limit are compared.
pub fn ks_distance<T: Scalar>(ascending: &[T], cdf: impl Fn(T) -> T) -> T {
    let k = T::of_usize(ascending.len());
    let mut d = T::zero();
    for (i, x) in ascending.iter().enumerate() {
        let f = cdf(*x);
        let above = T::of_usize(i + 1) / k - f;
        let below = f - T::of_usize(i) / k;
        d = d.max(above.abs()).max(below.abs());
    }
    d
}

/// KS test of the top `fit.k_samples` values of `s` against the fitted Pareto.
pub fn ks_test<T: Scalar>(s: &Spectrum<T>, fit: &PowerLawFit<T>, alpha: f64) -> Result<KsVerdict<T>> {
    ks_test_sorted(s.values(), fit, alpha)
}

pub fn ks_test_sorted<T: Scalar>(values: &[T], fit: &PowerLawFit<T>, alpha: f64) -> Result<KsVerdict<T>> {
    let k = fit.k_samples;
    if k > values.len() {
        return Err(Error::MismatchedFit {
            fit_k: k,
            available: values.len(),
        });
    }
    let d_c = T::of(critical_value(k, alpha)?);
    let ascending: Vec<T> = values[..k].iter().rev().copied().collect();
    let d_ks = ks_distance(&ascending, |x| fit.cdf(x));
    Ok(KsVerdict {
        d_ks,
        d_c,
        alpha,
        k_samples: k,
        is_power_law: d_ks <= d_c,
    })
}

/// Fit plus KS verdict in one call.
pub fn fit_and_test<T: Scalar>(
    s: &Spectrum<T>,
    k: usize,
    alpha: f64,
) -> Result<(PowerLawFit<T>, KsVerdict<T>)> {
    // validate alpha before doing any work
    critical_value(k.max(1), alpha)?;
    let fit = mle_fit(s, k)?;
    let verdict = ks_test(s, &fit, alpha)?;
    Ok((fit, verdict))
}

/// Least-squares rank-size slope: `-slope` of `ln lambda_k` against `ln k`.
pub fn zipf_slope_regression<T: Scalar>(s: &Spectrum<T>, k: usize) -> Result<T> {
    if k < 3 {
        return Err(Error::InvalidCount(format!("regression needs k >= 3, got {k}")));
    }
    let top = s.top_positive(k)?;
    let n = T::of_usize(k);
    let xs: Vec<T> = (1..=k).map(|r| T::of_usize(r).ln()).collect();
    let ys: Vec<T> = top.iter().map(|v| v.ln()).collect();
    let mean_x = xs.iter().fold(T::zero(), |a, x| a + *x) / n;
    let mean_y = ys.iter().fold(T::zero(), |a, y| a + *y) / n;
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    for (x, y) in xs.iter().zip(&ys) {
        let dx = *x - mean_x;
        sxy = sxy + dx * (*y - mean_y);
        sxx = sxx + dx * dx;
    }
    Ok(-(sxy / sxx))
}

/// `sum_{k=1}^{n} k^-s`, summed smallest term first.
pub fn zipf_normalizer<T: Scalar>(n: usize, s: T) -> T {
    (1..=n)
        .rev()
        .fold(T::zero(), |acc, k| acc + T::of_usize(k).powf(-s))
}
