//! Matrix-free symmetric Lanczos for the algebraically largest eigenvalues.
//!
//! The Krylov basis is kept in full and, by default, every new vector is
//! reorthogonalized against all previous ones (classical Gram-Schmidt applied
//! twice). Ritz values come from [`crate::tridiag::ql_implicit`]; the residual
//! of Ritz pair `i` is `|beta_m * z_{m,i}|`, which only needs the last row of
//! the tridiagonal eigenvector matrix.
//!
//! When the recurrence breaks down (`beta ~ 0`, an invariant subspace was
//! found) a fresh random vector orthogonal to the basis is started, so
//! repeated eigenvalues are still found with full multiplicity.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm};
use crate::scalar::Scalar;
use crate::spectrum::{Source, Spectrum};
use crate::tridiag::ql_implicit;

/// Matrix-vector product of a symmetric operator.
///
/// `apply` must be callable concurrently from several threads.
pub trait SymmetricOperator<T>: Sync {
    fn dim(&self) -> usize;
    /// Writes `H v` into `out` (both of length `dim`).
    fn apply(&self, v: &[T], out: &mut [T]);
}

impl<T: Scalar + nalgebra::Scalar> SymmetricOperator<T> for DMatrix<T> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, v: &[T], out: &mut [T]) {
        let n = self.nrows();
        out.iter_mut().for_each(|o| *o = T::zero());
        // column-major storage
        for (j, col) in self.as_slice().chunks_exact(n).enumerate() {
            let vj = v[j];
            if vj != T::zero() {
                axpy(vj, col, out);
            }
        }
    }
}

/// Diagonal operator.
#[derive(Debug, Clone)]
pub struct Diagonal<T>(pub Vec<T>);

impl<T: Scalar> SymmetricOperator<T> for Diagonal<T> {
    fn dim(&self) -> usize {
        self.0.len()
    }

    fn apply(&self, v: &[T], out: &mut [T]) {
        for ((o, d), x) in out.iter_mut().zip(&self.0).zip(v) {
            *o = *d * *x;
        }
    }
}

/// Wraps a closure `|v, out|` as an operator.
pub struct FnOperator<F> {
    dim: usize,
    f: F,
}

impl<F> FnOperator<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<T, F> SymmetricOperator<T> for FnOperator<F>
where
    F: Fn(&[T], &mut [T]) + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, v: &[T], out: &mut [T]) {
        (self.f)(v, out)
    }
}

#[derive(Debug, Clone)]
pub struct LanczosConfig {
    /// Number of largest eigenvalues wanted.
    pub k: usize,
    /// Iteration cap; `None` means the operator dimension.
    pub max_iters: Option<usize>,
    /// Ritz residual tolerance relative to the norm estimate.
    pub tol: f64,
    pub seed: u64,
    pub reorthogonalize: bool,
    /// Relative tolerance of the symmetry probe run before iterating.
    pub symmetry_tol: f64,
}

impl LanczosConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            max_iters: None,
            tol: 1e-10,
            seed: 0,
            reorthogonalize: true,
            symmetry_tol: 1e-10,
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = Some(max_iters);
        self
    }

    fn validate(&self, dim: usize) -> Result<usize> {
        if self.k == 0 || self.k > dim {
            return Err(Error::InvalidConfig(format!(
                "k = {} must lie in 1..={dim}",
                self.k
            )));
        }
        let max_iters = self.max_iters.unwrap_or(dim);
        if max_iters < self.k {
            return Err(Error::InvalidConfig(format!(
                "max_iters = {max_iters} is smaller than k = {}",
                self.k
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig("tol must be positive".into()));
        }
        Ok(max_iters.min(dim))
    }
}

fn random_unit<T: Scalar>(rng: &mut ChaCha8Rng, n: usize) -> Vec<T> {
    loop {
        let v: Vec<T> = (0..n)
            .map(|_| {
                let x: f64 = StandardNormal.sample(rng);
                T::of(x)
            })
            .collect();
        let nv = norm(&v);
        if nv > T::zero() {
            return v.into_iter().map(|x| x / nv).collect();
        }
    }
}

/// Checks `<Hv, w> = <v, Hw>` on three seeded random pairs and returns the
/// worst relative discrepancy.
pub fn symmetry_probe<T: Scalar, O: SymmetricOperator<T> + ?Sized>(op: &O, seed: u64) -> f64 {
    let n = op.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5eed);
    let mut hv = vec![T::zero(); n];
    let mut hw = vec![T::zero(); n];
    let mut worst = 0.0f64;
    for _ in 0..3 {
        let v = random_unit::<T>(&mut rng, n);
        let w = random_unit::<T>(&mut rng, n);
        op.apply(&v, &mut hv);
        op.apply(&w, &mut hw);
        let lhs = dot(&hv, &w).as_f64();
        let rhs = dot(&v, &hw).as_f64();
        let scale = norm(&hv).as_f64().max(norm(&hw).as_f64());
        if scale > 0.0 {
            worst = worst.max((lhs - rhs).abs() / scale);
        }
    }
    worst
}

/// Subtracts the projection of `w` on every basis vector, twice.
fn orthogonalize<T: Scalar>(basis: &[Vec<T>], w: &mut [T]) {
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, w);
            axpy(-c, q, w);
        }
    }
}

struct Ritz<T> {
    values: Vec<T>,
    residuals: Vec<T>,
}

fn ritz<T: Scalar>(alpha: &[T], beta: &[T], beta_next: T) -> Result<Ritz<T>> {
    let m = alpha.len();
    let mut d = alpha.to_vec();
    let mut last = vec![T::zero(); m];
    last[m - 1] = T::one();
    let mut rows = [last];
    ql_implicit(&mut d, &beta[..m - 1], &mut rows)?;
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| d[b].partial_cmp(&d[a]).unwrap());
    Ok(Ritz {
        values: order.iter().map(|&i| d[i]).collect(),
        residuals: order.iter().map(|&i| (beta_next * rows[0][i]).abs()).collect(),
    })
}

/// Top-`k` eigenvalues of `op`, descending.
///
/// On non-convergence within the iteration cap, returns
/// [`Error::Stagnation`] carrying the best partial Ritz values.
pub fn lanczos_topk<T, O>(op: &O, cfg: &LanczosConfig) -> Result<Spectrum<T>>
where
    T: Scalar,
    O: SymmetricOperator<T> + ?Sized,
{
    lanczos_topk_from(op, cfg, None)
}

/// As [`lanczos_topk`], starting from `start` instead of a random vector.
pub fn lanczos_topk_from<T, O>(op: &O, cfg: &LanczosConfig, start: Option<&[T]>) -> Result<Spectrum<T>>
where
    T: Scalar,
    O: SymmetricOperator<T> + ?Sized,
{
    let n = op.dim();
    let max_iters = cfg.validate(n)?;
    let discrepancy = symmetry_probe(op, cfg.seed);
    if discrepancy > cfg.symmetry_tol {
        return Err(Error::NotSymmetric { discrepancy });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let q0 = match start {
        Some(s) => {
            if s.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: s.len(),
                });
            }
            let ns = norm(s);
            if !(ns > T::zero()) {
                return Err(Error::InvalidConfig("start vector is zero".into()));
            }
            s.iter().map(|x| *x / ns).collect()
        }
        None => random_unit(&mut rng, n),
    };

    let tol = T::of(cfg.tol);
    let mut basis: Vec<Vec<T>> = vec![q0];
    let mut alpha: Vec<T> = Vec::with_capacity(max_iters);
    let mut beta: Vec<T> = Vec::with_capacity(max_iters);
    let mut w = vec![T::zero(); n];
    let mut norm_est = T::zero();

    for j in 0..max_iters {
        op.apply(&basis[j], &mut w);
        let a = dot(&basis[j], &w);
        alpha.push(a);
        axpy(-a, &basis[j], &mut w);
        if j > 0 {
            axpy(-beta[j - 1], &basis[j - 1], &mut w);
        }
        if cfg.reorthogonalize {
            orthogonalize(&basis, &mut w);
        }
        let b = norm(&w);
        norm_est = norm_est.max(a.abs()).max(b);
        let m = j + 1;
        let complete = m == n;
        let breakdown = b <= T::epsilon() * T::of(100.0) * norm_est.max(T::min_positive_value());
        let beta_next = if breakdown || complete { T::zero() } else { b };

        // After a breakdown the Ritz values of the finished block are exact but
        // may not be the largest, so convergence is only judged on live blocks.
        let stride = 1 + m / 100;
        if m >= cfg.k && (complete || (!breakdown && (m == max_iters || m % stride == 0))) {
            let r = ritz(&alpha, &beta, beta_next)?;
            let scale = r.values.iter().fold(T::zero(), |acc, v| acc.max(v.abs())).max(norm_est);
            let converged = r.residuals[..cfg.k]
                .iter()
                .filter(|res| **res <= tol * scale)
                .count();
            if converged == cfg.k {
                let values = r.values[..cfg.k].to_vec();
                return Ok(Spectrum::new(values, Source::Lanczos)?.with_n_total(n));
            }
        }

        if complete {
            break;
        }
        beta.push(beta_next);
        if beta_next == T::zero() {
            // invariant subspace: restart orthogonally to everything so far
            let mut fresh = random_unit::<T>(&mut rng, n);
            orthogonalize(&basis, &mut fresh);
            let nf = norm(&fresh);
            fresh.iter_mut().for_each(|x| *x = *x / nf);
            basis.push(fresh);
        } else {
            basis.push(w.iter().map(|x| *x / b).collect());
        }
    }

    let beta_last = beta.last().copied().unwrap_or(T::zero());
    let r = ritz(&alpha, &beta, beta_last)?;
    let scale = r.values.iter().fold(T::zero(), |acc, v| acc.max(v.abs())).max(norm_est);
    let k = cfg.k.min(r.values.len());
    let converged = r.residuals[..k].iter().filter(|res| **res <= tol * scale).count();
    Err(Error::Stagnation {
        partial: r.values[..k].iter().map(|v| v.as_f64()).collect(),
        converged,
        requested: cfg.k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dense_eigh;

    fn random_symmetric(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = DMatrix::<f64>::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
        (&b + b.transpose()) * 0.5
    }

    #[test]
    fn identity_operator() {
        let op = Diagonal(vec![1.0f64; 100]);
        let s = lanczos_topk(&op, &LanczosConfig::new(5)).unwrap();
        assert_eq!(s.len(), 5);
        for v in s.values() {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn diagonal_operator() {
        let op = Diagonal((1..=200).map(|i| i as f64).collect());
        let s = lanczos_topk(&op, &LanczosConfig::new(3).seed(4)).unwrap();
        for (v, want) in s.values().iter().zip([200.0, 199.0, 198.0]) {
            assert!((v - want).abs() < 1e-8, "{v}");
        }
    }

    #[test]
    fn random_matrix_vs_dense() {
        let a = random_symmetric(200, 17);
        let dense = dense_eigh(&a).unwrap();
        let s = lanczos_topk(&a, &LanczosConfig::new(20).seed(3)).unwrap();
        for (got, want) in s.values().iter().zip(dense.values()) {
            assert!((got - want).abs() <= 1e-8 * want.abs(), "{got} vs {want}");
        }
    }

    #[test]
    fn repeated_eigenvalues_keep_multiplicity() {
        let mut d = vec![5.0f64; 4];
        d.extend((0..50).map(|i| i as f64 * 0.01));
        let s = lanczos_topk(&Diagonal(d), &LanczosConfig::new(6).seed(1)).unwrap();
        let v = s.values();
        for x in &v[..4] {
            assert!((x - 5.0).abs() < 1e-10);
        }
        assert!((v[4] - 0.49).abs() < 1e-8);
    }

    #[test]
    fn deterministic_for_seed() {
        let a = random_symmetric(60, 2);
        let cfg = LanczosConfig::new(5).seed(77);
        let x = lanczos_topk(&a, &cfg).unwrap();
        let y = lanczos_topk(&a, &cfg).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn rejects_asymmetric_operator() {
        let mut a = random_symmetric(20, 1);
        a[(0, 1)] += 1.0;
        let err = lanczos_topk(&a, &LanczosConfig::new(2)).unwrap_err();
        assert!(matches!(err, Error::NotSymmetric { .. }));
    }

    #[test]
    fn invalid_configs() {
        let op = Diagonal(vec![1.0f64; 10]);
        assert!(matches!(
            lanczos_topk(&op, &LanczosConfig::new(0)),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            lanczos_topk(&op, &LanczosConfig::new(11)),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            lanczos_topk(&op, &LanczosConfig::new(5).max_iters(4)),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            lanczos_topk_from(&op, &LanczosConfig::new(2), Some(&[1.0, 2.0])),
            Err(Error::DimensionMismatch { expected: 10, got: 2 })
        ));
    }

    #[test]
    fn stagnation_returns_partial() {
        let a = random_symmetric(300, 8);
        let err = lanczos_topk(&a, &LanczosConfig::new(10).max_iters(12)).unwrap_err();
        match err {
            Error::Stagnation {
                partial,
                converged,
                requested,
            } => {
                assert_eq!(partial.len(), 10);
                assert!(converged < requested);
                assert!(partial.windows(2).all(|w| w[0] >= w[1]));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn closure_operator_f32() {
        let op = FnOperator::new(30, |v: &[f32], out: &mut [f32]| {
            for (i, (o, x)) in out.iter_mut().zip(v).enumerate() {
                *o = (i + 1) as f32 * *x;
            }
        });
        let mut cfg = LanczosConfig::new(2);
        cfg.tol = 1e-5;
        cfg.symmetry_tol = 1e-5;
        let s = lanczos_topk(&op, &cfg).unwrap();
        assert!((s.values()[0] - 30.0).abs() < 1e-3);
        assert!((s.values()[1] - 29.0).abs() < 1e-3);
    }
}
