//! Eigengaps `delta_k = lambda_k - lambda_{k+1}`, their rank-size law, and
//! Davis-Kahan bounds on eigenvector rotation under perturbation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::powerlaw::{mle_fit_sorted, zipf_normalizer, PowerLawFit};
use crate::scalar::Scalar;
use crate::spectrum::Spectrum;

/// Gaps between consecutive retained eigenvalues, in eigenvalue-rank order.
#[derive(Debug, Clone, PartialEq)]
pub struct EigengapSeries<T> {
    gaps: Vec<T>,
    /// Number of eigenvalues the gaps were taken from.
    k: usize,
}

impl<T: Scalar> EigengapSeries<T> {
    /// Gaps indexed by eigenvalue rank: `by_rank()[i]` is `delta_{i+1}`.
    pub fn by_rank(&self) -> &[T] {
        &self.gaps
    }

    /// Gap magnitudes re-sorted descending.
    pub fn resorted(&self) -> Vec<T> {
        let mut g = self.gaps.clone();
        g.sort_by(|a, b| b.partial_cmp(a).unwrap());
        g
    }

    pub fn len(&self) -> usize {
        self.gaps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gaps.is_empty()
    }

    pub fn source_k(&self) -> usize {
        self.k
    }
}

pub fn gaps<T: Scalar>(s: &Spectrum<T>, k: usize) -> Result<EigengapSeries<T>> {
    if k < 2 {
        return Err(Error::InsufficientLength(k));
    }
    if k > s.len() {
        return Err(Error::MismatchedFit {
            fit_k: k,
            available: s.len(),
        });
    }
    let gaps = s.values()[..k].windows(2).map(|w| w[0] - w[1]).collect();
    Ok(EigengapSeries { gaps, k })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceSource {
    /// The spectrum's own full-trace hint.
    Hint,
    /// Sum of the top-K retained eigenvalues.
    TopKSum,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapPrediction<T> {
    /// `lambda_k [1 - (k/(k+1))^s]`.
    pub exact: T,
    /// `Tr(H) Z_d^-1 (k+1)^-(s+1)`, the small-`s` approximation.
    pub approx: T,
    pub trace_source: TraceSource,
}

/// Predicted gap at rank `k` (1-based) from a fitted Zipf slope.
///
/// The trace comes from the spectrum's hint (with `Z_d` summed over the full
/// operator dimension), or, when `allow_top_k_trace` is set and no hint
/// exists, from the sum of the top `fit.k_samples` values (with `Z_d` over
/// those same `K` terms).
pub fn gap_law_predicted<T: Scalar>(
    s: &Spectrum<T>,
    fit: &PowerLawFit<T>,
    k: usize,
    allow_top_k_trace: bool,
) -> Result<GapPrediction<T>> {
    if k == 0 || k > s.len() {
        return Err(Error::RankOutOfRange { rank: k, max: s.len() });
    }
    let slope = fit.s_hat;
    let (trace, n_terms, trace_source) = match s.trace_hint() {
        Some(t) => (t, s.n_total().unwrap_or(s.len()), TraceSource::Hint),
        None if allow_top_k_trace => {
            let kk = fit.k_samples.min(s.len());
            let sum = s.values()[..kk].iter().fold(T::zero(), |a, v| a + *v);
            (sum, kk, TraceSource::TopKSum)
        }
        None => return Err(Error::MissingTrace),
    };
    let kf = T::of_usize(k);
    let lambda_k = s.values()[k - 1];
    let exact = lambda_k * (T::one() - (kf / (kf + T::one())).powf(slope));
    let z_d = zipf_normalizer(n_terms, slope);
    let approx = trace / z_d * (kf + T::one()).powf(-(slope + T::one()));
    Ok(GapPrediction {
        exact,
        approx,
        trace_source,
    })
}

/// Power-law fit over the top `k` re-sorted gap magnitudes.
pub fn fit_gap_law<T: Scalar>(g: &EigengapSeries<T>, k: usize) -> Result<PowerLawFit<T>> {
    let sorted = g.resorted();
    if k >= 2 && k <= sorted.len() && sorted[0] == sorted[k - 1] {
        return Err(Error::DegenerateSample);
    }
    mle_fit_sorted(&sorted, k)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DkBound<T> {
    pub k: usize,
    /// Upper bound on the sine of the angle; `+inf` when the min gap is zero.
    pub bound: T,
    pub epsilon_m_op: T,
}

impl<T: Scalar> DkBound<T> {
    pub fn is_infinite(&self) -> bool {
        self.bound.is_infinite()
    }
}

/// `2 eps ||M|| / min(delta_{k-1}, delta_k)` at 1-based rank `k`.
pub fn dk_bound<T: Scalar>(s: &Spectrum<T>, k: usize, epsilon_m_op: T) -> Result<DkBound<T>> {
    let n = s.len();
    if n < 3 || k < 2 || k > n - 1 {
        return Err(Error::RankOutOfRange {
            rank: k,
            max: n.saturating_sub(1),
        });
    }
    if epsilon_m_op < T::zero() {
        return Err(Error::InvalidConfig("epsilon * ||M|| must be non-negative".into()));
    }
    let v = s.values();
    let min_gap = (v[k - 2] - v[k - 1]).min(v[k - 1] - v[k]);
    let bound = if min_gap > T::zero() {
        T::of(2.0) * epsilon_m_op / min_gap
    } else {
        T::infinity()
    };
    Ok(DkBound {
        k,
        bound,
        epsilon_m_op,
    })
}

/// Closed-form bound `2 eps ||M|| (k+1)^(s+1) / lambda_1` for power-law gaps.
pub fn dk_bound_powerlaw<T: Scalar>(fit: &PowerLawFit<T>, lambda1: T, k: usize, epsilon_m_op: T) -> T {
    T::of(2.0) * epsilon_m_op * T::of_usize(k + 1).powf(fit.s_hat + T::one()) / lambda1
}

/// Sine of the angle between two unit vectors, insensitive to their signs.
pub fn sin_angle<T: Scalar>(u: &[T], v: &[T]) -> T {
    let c = crate::linalg::dot(u, v).abs().min(T::one());
    (T::one() - c * c).max(T::zero()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{make_spectrum, Source};

    fn spec(v: &[f64]) -> Spectrum<f64> {
        make_spectrum(v, Source::Ingested).unwrap()
    }

    fn zipf(n: usize) -> Spectrum<f64> {
        spec(&(1..=n).map(|k| 1.0 / k as f64).collect::<Vec<_>>())
    }

    #[test]
    fn gap_examples() {
        assert_eq!(gaps(&spec(&[4.0, 3.0, 1.0]), 3).unwrap().by_rank(), &[1.0, 2.0]);
        assert_eq!(gaps(&spec(&[2.0, 2.0, 2.0]), 3).unwrap().by_rank(), &[0.0, 0.0]);
        assert!(matches!(gaps(&spec(&[2.0, 1.0]), 1), Err(Error::InsufficientLength(1))));
    }

    #[test]
    fn zipf_gaps_closed_form() {
        let g = gaps(&zipf(101), 101).unwrap();
        for (i, d) in g.by_rank().iter().enumerate() {
            let k = (i + 1) as f64;
            let want = 1.0 / (k * (k + 1.0));
            assert!((d - want).abs() <= 1e-12 * want, "k={k}");
        }
    }

    #[test]
    fn telescoping() {
        let s = spec(&[9.5, 7.25, 7.25, 3.0, 0.5, -1.0]);
        let g = gaps(&s, 6).unwrap();
        let sum: f64 = g.by_rank().iter().sum();
        assert_eq!(sum, 9.5 - -1.0);
    }

    #[test]
    fn predicted_gap_eq9_matches_closed_form() {
        let s = zipf(200);
        let fit = PowerLawFit::new(2.0, s.values()[199], 200).unwrap();
        for k in 1..=100 {
            let p = gap_law_predicted(&s, &fit, k, true).unwrap();
            let kf = k as f64;
            let want = 1.0 / (kf * (kf + 1.0));
            assert!((p.exact - want).abs() <= 1e-14 * want);
            assert_eq!(p.trace_source, TraceSource::TopKSum);
        }
        let p = gap_law_predicted(&s, &fit, 1, true).unwrap();
        assert!((p.exact - 0.5).abs() < 1e-15);
    }

    #[test]
    fn predicted_gap_eq10_with_trace_hint() {
        let full = zipf(1000);
        let trace: f64 = full.values().iter().sum();
        let s = spec(&full.values()[..100]).with_trace_hint(trace).with_n_total(1000);
        let fit = PowerLawFit::new(2.0, s.values()[99], 100).unwrap();
        let p = gap_law_predicted(&s, &fit, 9, false).unwrap();
        // trace / Z_d = lambda_1 = 1 for an exact s = 1 law
        assert!((p.approx - 0.01).abs() < 1e-12);
        assert_eq!(p.trace_source, TraceSource::Hint);
        assert!(matches!(
            gap_law_predicted(&zipf(10), &fit, 3, false),
            Err(Error::MissingTrace)
        ));
    }

    #[test]
    fn gap_exponent_is_one_larger() {
        let g = gaps(&zipf(2000), 2000).unwrap();
        let fit = fit_gap_law(&g, 1000).unwrap();
        assert!((fit.s_hat - 2.0).abs() < 0.1, "{}", fit.s_hat);
    }

    #[test]
    fn gap_exponent_arithmetic() {
        let fit = PowerLawFit::<f64>::new(1.550, 1.0, 1000).unwrap();
        assert!((fit.s_hat - 1.818).abs() < 1e-3);
        assert!((fit.sigma - 0.017).abs() < 5e-4);
    }

    #[test]
    fn constant_spectrum_gap_fit_is_degenerate() {
        let g = gaps(&spec(&[3.0; 10]), 10).unwrap();
        assert!(matches!(fit_gap_law(&g, 5), Err(Error::DegenerateSample)));
    }

    #[test]
    fn dk_examples() {
        let b = dk_bound(&spec(&[3.0, 2.0, 1.0]), 2, 0.1).unwrap();
        assert!((b.bound - 0.2).abs() < 1e-15);
        let b = dk_bound(&spec(&[3.0, 2.0, 2.0, 1.0]), 2, 0.1).unwrap();
        assert!(b.is_infinite());
        assert!(matches!(
            dk_bound(&spec(&[3.0, 2.0, 1.0]), 1, 0.1),
            Err(Error::RankOutOfRange { .. })
        ));
        assert!(matches!(
            dk_bound(&spec(&[3.0, 2.0, 1.0]), 3, 0.1),
            Err(Error::RankOutOfRange { .. })
        ));
    }

    #[test]
    fn dk_bound_monotone_in_gap() {
        let a = dk_bound(&spec(&[4.0, 3.0, 2.0]), 2, 0.01).unwrap();
        let b = dk_bound(&spec(&[5.0, 3.0, 1.0]), 2, 0.01).unwrap();
        assert!(b.bound < a.bound);
    }

    #[test]
    fn powerlaw_bound_ratio() {
        let fit = PowerLawFit::new(2.0, 1.0, 1000).unwrap();
        let ratio = dk_bound_powerlaw(&fit, 1.0, 1000, 1e-3) / dk_bound_powerlaw(&fit, 1.0, 10, 1e-3);
        assert!((ratio - (1001.0f64 / 11.0).powi(2)).abs() < 1e-9 * ratio);
        assert!((ratio - 8.28e3).abs() < 5.0);
        assert!((dk_bound_powerlaw(&fit, 4.0, 0, 0.5) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn closed_form_bound_within_factor_two_of_gap_bound() {
        let s = zipf(200);
        let fit = PowerLawFit::new(2.0, s.values()[199], 200).unwrap();
        for k in 2..=100 {
            let direct = dk_bound(&s, k, 1e-3).unwrap().bound;
            let closed = dk_bound_powerlaw(&fit, s.values()[0], k, 1e-3);
            let r = closed / direct;
            assert!((0.5..=2.0).contains(&r), "k={k} ratio={r}");
        }
    }

    #[test]
    fn sin_angle_sign_insensitive() {
        let u = [1.0, 0.0];
        let v = [-(0.5f64.sqrt()), 0.5f64.sqrt()];
        assert!((sin_angle(&u, &v) - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(sin_angle(&u, &[-1.0, 0.0]), 0.0);
    }
}
