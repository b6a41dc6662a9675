use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::pdb::ProteinStructure;
use crate::error::{Error, Result};
use crate::linalg::dense_eigh;
use crate::powerlaw::{fit_and_test, KsVerdict, PowerLawFit};
use crate::spectrum::{Source, Spectrum};

pub const DEFAULT_CUTOFF: f64 = 9.0;
pub const DEFAULT_KAPPA: f64 = 1.0;
pub const DEFAULT_ZERO_TOL: f64 = 1e-8;
pub const RIGID_MODES: usize = 6;
/// Smallest number of nonzero modes accepted by [`protein_powerlaw`].
pub const MIN_FIT_MODES: usize = 60;

#[derive(Debug, Clone)]
pub struct AnmModel {
    /// Contact Laplacian: -1 for residues within the cutoff, degree on the diagonal.
    pub gamma: DMatrix<f64>,
    /// 3N x 3N Hessian, residue `i` occupying rows and columns `3i..3i+3`.
    pub hessian: DMatrix<f64>,
    pub cutoff: f64,
    pub kappa: f64,
}

impl AnmModel {
    pub fn n_residues(&self) -> usize {
        self.gamma.nrows()
    }
}

pub fn build_anm(p: &ProteinStructure, cutoff: f64, kappa: f64) -> Result<AnmModel> {
    if !(cutoff > 0.0 && cutoff.is_finite()) {
        return Err(Error::InvalidConfig(format!("cutoff must be positive, got {cutoff}")));
    }
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidConfig(format!("kappa must be positive, got {kappa}")));
    }
    let n = p.len();
    if n < 2 {
        return Err(Error::InvalidCount(format!("need at least 2 residues, got {n}")));
    }
    let x = p.coords();
    let rc2 = cutoff * cutoff;
    let mut gamma = DMatrix::<f64>::zeros(n, n);
    let mut h = DMatrix::<f64>::zeros(3 * n, 3 * n);
    for i in 0..n {
        for j in i + 1..n {
            let d = [x[j][0] - x[i][0], x[j][1] - x[i][1], x[j][2] - x[i][2]];
            let s2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
            if s2 > rc2 {
                continue;
            }
            if s2 == 0.0 {
                return Err(Error::CoincidentResidues { i, j });
            }
            gamma[(i, j)] = -1.0;
            gamma[(j, i)] = -1.0;
            gamma[(i, i)] += 1.0;
            gamma[(j, j)] += 1.0;
            for a in 0..3 {
                for b in 0..3 {
                    let v = -kappa * d[a] * d[b] / s2;
                    h[(3 * i + a, 3 * j + b)] = v;
                    h[(3 * j + a, 3 * i + b)] = v;
                    h[(3 * i + a, 3 * i + b)] -= v;
                    h[(3 * j + a, 3 * j + b)] -= v;
                }
            }
        }
    }
    Ok(AnmModel {
        gamma,
        hessian: h,
        cutoff,
        kappa,
    })
}

#[derive(Debug, Clone)]
pub struct VibrationalSpectrum {
    /// All Hessian eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    pub zero_modes: usize,
    /// `1/lambda` over the nonzero modes, descending.
    pub inverse: Spectrum<f64>,
}

impl VibrationalSpectrum {
    /// `sigma_i / sigma_1`.
    pub fn normalized(&self) -> Vec<f64> {
        let top = self.inverse.max();
        self.inverse.values().iter().map(|s| s / top).collect()
    }

    pub fn n_modes(&self) -> usize {
        self.inverse.len()
    }
}

/// Dense eigendecomposition; eigenvalues below `zero_tol * lambda_max` are
/// rigid-body modes and exactly six are required.
pub fn vibrational_spectrum(m: &AnmModel, zero_tol: f64) -> Result<VibrationalSpectrum> {
    if !(zero_tol > 0.0 && zero_tol < 1.0) {
        return Err(Error::InvalidConfig(format!("zero_tol must lie in (0, 1), got {zero_tol}")));
    }
    let desc = dense_eigh(&m.hessian)?;
    let mut eigenvalues = desc.values().to_vec();
    eigenvalues.reverse();
    let threshold = zero_tol * desc.max();
    let zero_modes = eigenvalues.iter().filter(|v| **v < threshold).count();
    if zero_modes != RIGID_MODES {
        return Err(Error::UnexpectedZeroModes(zero_modes));
    }
    let inverse: Vec<f64> = eigenvalues[zero_modes..].iter().map(|v| 1.0 / v).collect();
    let inverse = Spectrum::new(inverse, Source::AnmInverse)?;
    Ok(VibrationalSpectrum {
        eigenvalues,
        zero_modes,
        inverse,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProteinFit {
    pub fit: PowerLawFit<f64>,
    pub verdict: KsVerdict<f64>,
}

/// Power-law fit of the top tenth of the inverse spectrum (or the top `k`
/// when given).
pub fn protein_powerlaw(v: &VibrationalSpectrum, alpha: f64, k: Option<usize>) -> Result<ProteinFit> {
    let modes = v.n_modes();
    if modes < MIN_FIT_MODES {
        return Err(Error::TooFewModes {
            modes,
            required: MIN_FIT_MODES,
        });
    }
    let k = k.unwrap_or(modes / 10);
    let (fit, verdict) = fit_and_test(&v.inverse, k, alpha)?;
    Ok(ProteinFit { fit, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dense_eigh_pairs;
    use nalgebra::DVector;

    fn structure(coords: &[[f64; 3]]) -> ProteinStructure {
        ProteinStructure::from_coords("t", coords).unwrap()
    }

    /// Deterministic compact chain: a helix-like walk with ~3.8 A steps.
    pub(crate) fn helix(n: usize) -> Vec<[f64; 3]> {
        (0..n)
            .map(|i| {
                let t = i as f64 * 100f64.to_radians();
                [2.3 * t.cos(), 2.3 * t.sin(), 1.5 * i as f64]
            })
            .collect()
    }

    #[test]
    fn two_node_spring() {
        let m = build_anm(&structure(&[[0.0; 3], [1.0, 0.0, 0.0]]), 9.0, 2.5).unwrap();
        assert_eq!(m.hessian[(0, 3)], -2.5);
        assert_eq!(m.hessian[(0, 0)], 2.5);
        assert_eq!(m.hessian[(1, 1)], 0.0);
        let s = dense_eigh(&m.hessian).unwrap();
        assert!((s.values()[0] - 5.0).abs() < 1e-14);
        assert!(s.values()[1..].iter().all(|v| v.abs() < 1e-14));
        assert!(matches!(
            vibrational_spectrum(&m, DEFAULT_ZERO_TOL),
            Err(Error::UnexpectedZeroModes(5))
        ));
    }

    #[test]
    fn distant_pair_has_no_contacts() {
        let m = build_anm(&structure(&[[0.0; 3], [10.0, 0.0, 0.0]]), 9.0, 1.0).unwrap();
        assert!(m.hessian.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn triangle_has_six_zero_modes() {
        let h = 3f64.sqrt() / 2.0;
        let m = build_anm(&structure(&[[0.0; 3], [1.0, 0.0, 0.0], [0.5, h, 0.0]]), 9.0, 1.0).unwrap();
        let v = vibrational_spectrum(&m, DEFAULT_ZERO_TOL).unwrap();
        assert_eq!(v.zero_modes, 6);
        assert_eq!(v.n_modes(), 3);
        assert_eq!(v.normalized()[0], 1.0);
    }

    #[test]
    fn coincident_and_bad_config() {
        let p = structure(&[[1.0; 3], [1.0; 3], [2.0, 1.0, 1.0]]);
        assert!(matches!(build_anm(&p, 9.0, 1.0), Err(Error::CoincidentResidues { i: 0, j: 1 })));
        let p = structure(&helix(5));
        assert!(build_anm(&p, 0.0, 1.0).is_err());
        assert!(build_anm(&p, 9.0, -1.0).is_err());
    }

    #[test]
    fn laplacian_and_null_space() {
        let m = build_anm(&structure(&helix(40)), DEFAULT_CUTOFF, 1.0).unwrap();
        for i in 0..40 {
            let row: f64 = m.gamma.row(i).iter().sum();
            assert_eq!(row, 0.0);
        }
        assert_eq!(m.gamma, m.gamma.transpose());
        assert_eq!(m.hessian, m.hessian.transpose());
        let scale = m.hessian.norm();
        for axis in 0..3 {
            let t = DVector::from_fn(120, |r, _| if r % 3 == axis { 1.0 } else { 0.0 });
            assert!((&m.hessian * t).norm() <= 1e-12 * scale);
        }
        // infinitesimal rotations about the centroid
        let x = helix(40);
        let c = x.iter().fold([0.0; 3], |a, p| [a[0] + p[0] / 40.0, a[1] + p[1] / 40.0, a[2] + p[2] / 40.0]);
        for axis in 0..3 {
            let r = DVector::from_fn(120, |row, _| {
                let (i, comp) = (row / 3, row % 3);
                let p = [x[i][0] - c[0], x[i][1] - c[1], x[i][2] - c[2]];
                let w = [(axis == 0) as u8 as f64, (axis == 1) as u8 as f64, (axis == 2) as u8 as f64];
                let cross = [w[1] * p[2] - w[2] * p[1], w[2] * p[0] - w[0] * p[2], w[0] * p[1] - w[1] * p[0]];
                cross[comp]
            });
            assert!((&m.hessian * &r).norm() <= 1e-8 * scale * r.norm());
        }
    }

    #[test]
    fn kappa_scales_eigenvalues_only() {
        let p = structure(&helix(30));
        let a = vibrational_spectrum(&build_anm(&p, 9.0, 1.0).unwrap(), DEFAULT_ZERO_TOL).unwrap();
        let b = vibrational_spectrum(&build_anm(&p, 9.0, 3.0).unwrap(), DEFAULT_ZERO_TOL).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues).skip(6) {
            assert!((3.0 * x - y).abs() <= 1e-10 * y);
        }
        for (x, y) in a.normalized().iter().zip(b.normalized()) {
            assert!((x - y).abs() <= 1e-10);
        }
    }

    #[test]
    fn nonzero_modes_are_positive_and_orthogonal_to_rigid_motions() {
        let m = build_anm(&structure(&helix(25)), 9.0, 1.0).unwrap();
        let pairs = dense_eigh_pairs(&m.hessian).unwrap();
        let lmax = pairs.values[0];
        let nonzero = pairs.values.iter().filter(|v| **v >= DEFAULT_ZERO_TOL * lmax).count();
        assert_eq!(nonzero, 75 - 6);
        assert!(pairs.values.iter().all(|v| *v > -1e-10 * lmax));
    }

    #[test]
    fn disconnected_structure_rejected() {
        let mut x = helix(10);
        x.extend(helix(10).iter().map(|p| [p[0] + 100.0, p[1], p[2]]));
        let m = build_anm(&structure(&x), 9.0, 1.0).unwrap();
        assert!(matches!(
            vibrational_spectrum(&m, DEFAULT_ZERO_TOL),
            Err(Error::UnexpectedZeroModes(12))
        ));
    }

    #[test]
    fn too_few_modes() {
        let m = build_anm(&structure(&helix(15)), 9.0, 1.0).unwrap();
        let v = vibrational_spectrum(&m, DEFAULT_ZERO_TOL).unwrap();
        assert!(matches!(
            protein_powerlaw(&v, 0.05, None),
            Err(Error::TooFewModes { modes: 39, required: 60 })
        ));
    }
}
