//! Entropy functionals over densities on a bounded eigenvalue support, and a
//! numerical check that `p ∝ λ^beta_vol` is a constrained maximizer of
//! `S_p + beta_vol * S_vol`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_GRID_SIZE: usize = 4096;

/// Density values on a log-spaced grid, normalized so the trapezoid integral
/// is one.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid<T> {
    support: (T, T),
    points: Vec<T>,
    weights: Vec<T>,
    p: Vec<T>,
}

fn check_support<T: Scalar>(support: (T, T), m: usize) -> Result<()> {
    let (lo, hi) = support;
    if !(lo > T::zero() && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "support must satisfy 0 < lo < hi, got [{lo}, {hi}]"
        )));
    }
    if m < 2 {
        return Err(Error::InvalidConfig("grid needs at least 2 points".into()));
    }
    Ok(())
}

fn log_grid<T: Scalar>((lo, hi): (T, T), m: usize) -> Vec<T> {
    let (a, b) = (lo.ln(), hi.ln());
    let step = (b - a) / T::of_usize(m - 1);
    let mut x: Vec<T> = (0..m).map(|i| (a + step * T::of_usize(i)).exp()).collect();
    x[0] = lo;
    x[m - 1] = hi;
    x
}

fn trapezoid_weights<T: Scalar>(x: &[T]) -> Vec<T> {
    let m = x.len();
    let half = T::of(0.5);
    (0..m)
        .map(|i| {
            let left = if i > 0 { x[i] - x[i - 1] } else { T::zero() };
            let right = if i + 1 < m { x[i + 1] - x[i] } else { T::zero() };
            half * (left + right)
        })
        .collect()
}

fn xlogx<T: Scalar>(v: T) -> T {
    if v == T::zero() {
        T::zero()
    } else {
        v * v.ln()
    }
}

impl<T: Scalar> DensityGrid<T> {
    /// Tabulates `f` on a log-spaced grid and normalizes it.
    pub fn from_fn(support: (T, T), m: usize, f: impl Fn(T) -> T) -> Result<Self> {
        check_support(support, m)?;
        let points = log_grid(support, m);
        let weights = trapezoid_weights(&points);
        let raw: Vec<T> = points.iter().map(|&x| f(x)).collect();
        for (index, v) in raw.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteValue { index });
            }
            if *v < T::zero() {
                return Err(Error::InvalidConfig(format!("negative density at node {index}")));
            }
        }
        let mass = dot(&weights, &raw);
        if mass <= T::zero() {
            return Err(Error::InvalidConfig("density has zero mass".into()));
        }
        let p = raw.iter().map(|v| *v / mass).collect();
        Ok(Self {
            support,
            points,
            weights,
            p,
        })
    }

    pub fn support(&self) -> (T, T) {
        self.support
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn density(&self) -> &[T] {
        &self.p
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn mass(&self) -> T {
        dot(&self.weights, &self.p)
    }

    /// Draws `n` samples by inverting the piecewise-linear trapezoid CDF.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<T> {
        let m = self.len();
        let half = T::of(0.5);
        let mut cdf = Vec::with_capacity(m);
        cdf.push(T::zero());
        for i in 1..m {
            let dx = self.points[i] - self.points[i - 1];
            cdf.push(cdf[i - 1] + half * dx * (self.p[i] + self.p[i - 1]));
        }
        let total = cdf[m - 1];
        (0..n)
            .map(|_| {
                let u = T::of(rng.random::<f64>()) * total;
                let j = cdf.partition_point(|c| *c <= u).clamp(1, m - 1);
                let span = cdf[j] - cdf[j - 1];
                let t = if span > T::zero() { (u - cdf[j - 1]) / span } else { T::zero() };
                self.points[j - 1] + t * (self.points[j] - self.points[j - 1])
            })
            .collect()
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    crate::linalg::dot(a, b)
}

/// `-∫ p log p dλ`, with `0 log 0 = 0`.
pub fn spectral_entropy<T: Scalar>(g: &DensityGrid<T>) -> T {
    -g.weights
        .iter()
        .zip(&g.p)
        .fold(T::zero(), |acc, (w, p)| acc + *w * xlogx(*p))
}

/// `∫ p log λ dλ`.
pub fn volume_entropy<T: Scalar>(g: &DensityGrid<T>) -> T {
    g.weights
        .iter()
        .zip(&g.p)
        .zip(&g.points)
        .fold(T::zero(), |acc, ((w, p), x)| acc + *w * *p * x.ln())
}

pub fn total_entropy<T: Scalar>(g: &DensityGrid<T>, beta_vol: T) -> T {
    spectral_entropy(g) + beta_vol * volume_entropy(g)
}

/// The stationary density `p ∝ λ^beta_vol` on `support`.
pub fn maxent_density<T: Scalar>(beta_vol: T, support: (T, T), m: usize) -> Result<DensityGrid<T>> {
    DensityGrid::from_fn(support, m, |x| x.powf(beta_vol))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbationMode {
    /// Zero-mass perturbations, as the normalization constraint requires.
    Projected,
    /// Raw perturbations with no projection or renormalization.
    Unconstrained,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationarityConfig {
    pub beta_vol: f64,
    pub support: (f64, f64),
    pub grid_size: usize,
    pub trials: usize,
    pub eps: f64,
    pub seed: u64,
    pub mode: PerturbationMode,
}

impl StationarityConfig {
    pub fn new(beta_vol: f64, support: (f64, f64)) -> Self {
        Self {
            beta_vol,
            support,
            grid_size: DEFAULT_GRID_SIZE,
            trials: 200,
            eps: 1e-3,
            seed: 0,
            mode: PerturbationMode::Projected,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    pub config: StationarityConfig,
    pub s_total: f64,
    /// Largest `S_total(p + eps*eta) - S_total(p)` over trials.
    pub max_delta_s: f64,
    pub min_delta_s: f64,
    /// Largest `|eps * <grad S_total, eta>|` over trials.
    pub max_first_order: f64,
    pub slack: f64,
    /// Per-trial `|dS(eps)| / |dS(eps/10)|` summarized.
    pub ratio_median: f64,
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub all_within_slack: bool,
    pub second_order: bool,
    pub pass: bool,
}

pub const RATIO_RANGE: (f64, f64) = (50.0, 200.0);

struct Trial {
    delta: f64,
    delta_small: f64,
    first_order: f64,
}

/// Change in `S_total` when `p` moves to `q`, summed term by term so that
/// tiny differences are not lost to cancellation.
fn delta_total(g: &DensityGrid<f64>, q: &[f64], beta_vol: f64) -> f64 {
    let mut acc = 0.0;
    for (((&p, &q), &x), &w) in g.p.iter().zip(q).zip(&g.points).zip(&g.weights) {
        acc += w * (xlogx(p) - xlogx(q) + beta_vol * (q - p) * x.ln());
    }
    acc
}

fn perturbed(g: &DensityGrid<f64>, eta: &[f64], eps: f64, renormalize: bool) -> Vec<f64> {
    let mut q: Vec<f64> = g.p.iter().zip(eta).map(|(p, e)| p + eps * e).collect();
    if renormalize {
        let mass = dot(&g.weights, &q);
        q.iter_mut().for_each(|v| *v /= mass);
    }
    q
}

fn run_trial(g: &DensityGrid<f64>, cfg: &StationarityConfig, trial: usize) -> Trial {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(trial as u64);
    let mut eta: Vec<f64> = g
        .p
        .iter()
        .map(|p| {
            let z: f64 = StandardNormal.sample(&mut rng);
            p * z
        })
        .collect();
    let projected = cfg.mode == PerturbationMode::Projected;
    if projected {
        let mass = dot(&g.weights, &eta);
        eta.iter_mut().zip(&g.p).for_each(|(e, p)| *e -= mass * p);
    }
    let worst = eta
        .iter()
        .zip(&g.p)
        .filter(|(_, p)| **p > 0.0)
        .map(|(e, p)| (e / p).abs())
        .fold(0.0, f64::max);
    if worst > 0.0 {
        eta.iter_mut().for_each(|e| *e /= worst);
    }
    // gradient of the discrete functional: w_i (-log p_i - 1 + beta log x_i)
    let first_order = cfg.eps
        * (0..g.len())
            .map(|i| {
                let grad = -g.p[i].ln() - 1.0 + cfg.beta_vol * g.points[i].ln();
                g.weights[i] * grad * eta[i]
            })
            .sum::<f64>();
    let delta = delta_total(g, &perturbed(g, &eta, cfg.eps, projected), cfg.beta_vol);
    let delta_small = delta_total(g, &perturbed(g, &eta, cfg.eps / 10.0, projected), cfg.beta_vol);
    Trial {
        delta,
        delta_small,
        first_order,
    }
}

/// Perturbs the stationary density in `cfg.trials` random directions and
/// checks that the objective never rises beyond quadrature slack and that
/// the change is second order in `eps`.
pub fn stationarity_check(cfg: &StationarityConfig) -> Result<StationarityReport> {
    if cfg.trials == 0 {
        return Err(Error::InvalidCount("trials must be at least 1".into()));
    }
    if !(cfg.eps > 0.0 && cfg.eps.is_finite()) {
        return Err(Error::InvalidConfig(format!("eps must be positive, got {}", cfg.eps)));
    }
    if cfg.eps >= 1.0 {
        return Err(Error::PerturbationInfeasible(format!(
            "eps = {} can drive the density negative",
            cfg.eps
        )));
    }
    let g = maxent_density(cfg.beta_vol, cfg.support, cfg.grid_size)?;
    if g.p.iter().any(|p| *p <= 0.0) {
        return Err(Error::PerturbationInfeasible(
            "stationary density underflows to zero on the grid".into(),
        ));
    }
    let s_total = total_entropy(&g, cfg.beta_vol);
    let slack = 10.0 / (cfg.grid_size as f64).powi(2) * s_total.abs();

    let trials: Vec<Trial> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(&g, cfg, t))
        .collect();

    let max_delta_s = trials.iter().map(|t| t.delta).fold(f64::NEG_INFINITY, f64::max);
    let min_delta_s = trials.iter().map(|t| t.delta).fold(f64::INFINITY, f64::min);
    let max_first_order = trials.iter().map(|t| t.first_order.abs()).fold(0.0, f64::max);
    let mut ratios: Vec<f64> = trials
        .iter()
        .map(|t| t.delta.abs() / t.delta_small.abs())
        .collect();
    ratios.sort_by(|a, b| a.total_cmp(b));
    let ratio_median = ratios[ratios.len() / 2];
    let (ratio_min, ratio_max) = (ratios[0], ratios[ratios.len() - 1]);

    let all_within_slack = max_delta_s <= slack;
    let second_order = ratio_min >= RATIO_RANGE.0 && ratio_max <= RATIO_RANGE.1;
    Ok(StationarityReport {
        config: *cfg,
        s_total,
        max_delta_s,
        min_delta_s,
        max_first_order,
        slack,
        ratio_median,
        ratio_min,
        ratio_max,
        all_within_slack,
        second_order,
        pass: all_within_slack && second_order,
    })
}
