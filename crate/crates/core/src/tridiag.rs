//! Symmetric tridiagonal eigensolver (implicit-shift QL).

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MAX_SWEEPS: usize = 60;

fn hypot<T: Scalar>(a: T, b: T) -> T {
    a.hypot(b)
}

fn with_sign<T: Scalar>(magnitude: T, sign_of: T) -> T {
    if sign_of >= T::zero() {
        magnitude.abs()
    } else {
        -magnitude.abs()
    }
}

/// Diagonalizes the symmetric tridiagonal matrix with diagonal `diag` and
/// off-diagonal `off` (`off[i]` couples `i` and `i + 1`).
///
/// On return `diag` holds the (unsorted) eigenvalues. Every vector in `rows`
/// is treated as one row of the accumulated eigenvector matrix and rotated in
/// place: pass rows of the identity to get eigenvector components. Lanczos
/// only needs the last row, which keeps a convergence check at O(m^2).
pub fn ql_implicit<T: Scalar>(diag: &mut [T], off: &[T], rows: &mut [Vec<T>]) -> Result<()> {
    let n = diag.len();
    if n == 0 {
        return Ok(());
    }
    if off.len() + 1 != n {
        return Err(Error::DimensionMismatch {
            expected: n.saturating_sub(1),
            got: off.len(),
        });
    }
    for r in rows.iter() {
        if r.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: r.len(),
            });
        }
    }

    let mut e: Vec<T> = off.to_vec();
    e.push(T::zero());
    let d = diag;
    let two = T::of(2.0);

    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= T::epsilon() * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_SWEEPS {
                return Err(Error::InvalidConfig(
                    "tridiagonal QL failed to converge".into(),
                ));
            }

            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = hypot(g, T::one());
            g = d[m] - d[l] + e[l] / (g + with_sign(r, g));
            let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = hypot(f, g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] = d[i + 1] - p;
                    e[m] = T::zero();
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for row in rows.iter_mut() {
                    let f = row[i + 1];
                    row[i + 1] = s * row[i] + c * f;
                    row[i] = c * row[i] - s * f;
                }
            }
            if deflated {
                continue;
            }
            d[l] = d[l] - p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    Ok(())
}
