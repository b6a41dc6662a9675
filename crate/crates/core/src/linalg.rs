//! Dense symmetric eigendecomposition and small vector helpers.

use nalgebra::DMatrix;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::scalar::{LinalgScalar, Scalar};
use crate::spectrum::{Source, Spectrum};

/// Relative asymmetry accepted by [`dense_eigh`].
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Eigenvalues with matching unit eigenvectors (column `i` of `vectors`
/// belongs to `values[i]`), sorted descending.
#[derive(Debug, Clone)]
pub struct EigenPairs<T: LinalgScalar> {
    pub values: Vec<T>,
    pub vectors: DMatrix<T>,
}

pub fn max_abs<T: LinalgScalar>(m: &DMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, v| Float::max(acc, Float::abs(*v)))
}

/// Largest `|a_ij - a_ji|` divided by the largest `|a_ij|`.
pub fn relative_asymmetry<T: LinalgScalar>(m: &DMatrix<T>) -> Result<f64> {
    let (rows, cols) = m.shape();
    if rows != cols {
        return Err(Error::NotSquare { rows, cols });
    }
    let scale = max_abs(m);
    if scale == T::zero() {
        return Ok(0.0);
    }
    let mut worst = T::zero();
    for j in 0..cols {
        for i in 0..j {
            worst = Float::max(worst, Float::abs(m[(i, j)] - m[(j, i)]));
        }
    }
    Ok((worst / scale).as_f64())
}

fn check_symmetric<T: LinalgScalar>(m: &DMatrix<T>) -> Result<()> {
    let discrepancy = relative_asymmetry(m)?;
    if discrepancy > SYMMETRY_TOL {
        return Err(Error::NotSymmetric { discrepancy });
    }
    if m.nrows() == 0 {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

/// All eigenvalues of a symmetric matrix, descending.
pub fn dense_eigh<T: LinalgScalar>(m: &DMatrix<T>) -> Result<Spectrum<T>> {
    check_symmetric(m)?;
    let values = m.clone().symmetric_eigenvalues();
    let n = m.nrows();
    Ok(Spectrum::new(values.iter().copied().collect(), Source::Dense)?.with_n_total(n))
}

/// Eigenvalues and eigenvectors of a symmetric matrix, descending.
pub fn dense_eigh_pairs<T: LinalgScalar>(m: &DMatrix<T>) -> Result<EigenPairs<T>> {
    check_symmetric(m)?;
    let n = m.nrows();
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(EigenPairs { values, vectors })
}

/// Spectral norm of a symmetric matrix (largest absolute eigenvalue).
pub fn operator_norm_sym<T: LinalgScalar>(m: &DMatrix<T>) -> Result<T> {
    let s = dense_eigh(m)?;
    let v = s.values();
    Ok(Float::max(Float::abs(v[0]), Float::abs(v[v.len() - 1])))
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + *x * *y)
}

pub fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
pub fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi = *yi + alpha * *xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_orthogonal(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
        a.qr().q()
    }

    #[test]
    fn small_known_cases() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        assert_eq!(dense_eigh(&m).unwrap().values(), &[2.0, 1.0]);
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let v = dense_eigh(&m).unwrap();
        assert!((v.values()[0] - 1.0).abs() < 1e-15);
        assert!((v.values()[1] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn recovers_constructed_spectrum() {
        let n = 50;
        let q = random_orthogonal(n, 5);
        let d: Vec<f64> = (0..n).map(|i| (i as f64 - 20.0) * 0.37 + 0.01 * (i * i) as f64).collect();
        let a = &q * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(d.clone())) * q.transpose();
        let a = (&a + a.transpose()) * 0.5;
        let s = dense_eigh(&a).unwrap();
        let mut expect = d.clone();
        expect.sort_by(|x, y| y.partial_cmp(x).unwrap());
        for (got, want) in s.values().iter().zip(&expect) {
            assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        }
        let trace: f64 = (0..n).map(|i| a[(i, i)]).sum();
        let sum: f64 = s.values().iter().sum();
        assert!((trace - sum).abs() <= 1e-8 * trace.abs().max(1.0));
    }

    #[test]
    fn reconstruction() {
        let n = 30;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let b = DMatrix::<f64>::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
        let a = &b + b.transpose();
        let p = dense_eigh_pairs(&a).unwrap();
        let lambda = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(p.values.clone()));
        let rec = &p.vectors * lambda * p.vectors.transpose();
        assert!((rec - &a).norm() <= 1e-8 * a.norm());
        assert!(p.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn rejects_bad_shapes() {
        let m = DMatrix::<f64>::zeros(2, 3);
        assert!(matches!(dense_eigh(&m), Err(Error::NotSquare { rows: 2, cols: 3 })));
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.1, 1.0]);
        assert!(matches!(dense_eigh(&m), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn works_in_f32() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0f32, 1.0, 1.0, 0.0]);
        let v = dense_eigh(&m).unwrap();
        assert!((v.values()[0] - 1.0).abs() < 1e-6);
    }
}
