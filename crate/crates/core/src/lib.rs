//! Power-law analysis of Hessian eigenvalue spectra.
//!
//! The numerical core (spectra, Lanczos, power-law fitting, eigengaps,
//! entropy functionals) is generic over `f32`/`f64`; the aliases below fix
//! the scalar for the common cases. The protein and neural-network
//! pipelines work in `f64`.

// `!(x > 0.0)` style guards deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod anm;
pub mod eigengap;
pub mod error;
pub mod lanczos;
pub mod linalg;
pub mod maxent;
pub mod mlp;
pub mod powerlaw;
pub mod report;
pub mod scalar;
pub mod spectrum;
pub mod tridiag;

pub use error::{Error, Result};
pub use lanczos::{lanczos_topk, lanczos_topk_from, LanczosConfig, SymmetricOperator};
pub use powerlaw::{critical_value, fit_and_test, ks_test, mle_fit};
pub use report::Report;
pub use scalar::{LinalgScalar, Scalar};
pub use spectrum::{make_spectrum, parse_spectrum, read_spectrum, write_spectrum, Source};

pub type Spectrum = spectrum::Spectrum<f64>;
pub type Spectrum32 = spectrum::Spectrum<f32>;
pub type PowerLawFit = powerlaw::PowerLawFit<f64>;
pub type PowerLawFit32 = powerlaw::PowerLawFit<f32>;
pub type KsVerdict = powerlaw::KsVerdict<f64>;
pub type KsVerdict32 = powerlaw::KsVerdict<f32>;
pub type EigengapSeries = eigengap::EigengapSeries<f64>;
pub type EigengapSeries32 = eigengap::EigengapSeries<f32>;
pub type DkBound = eigengap::DkBound<f64>;
pub type DensityGrid = maxent::DensityGrid<f64>;
pub type DensityGrid32 = maxent::DensityGrid<f32>;
