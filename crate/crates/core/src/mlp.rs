//! A tiny tanh classifier with analytic gradients and a finite-difference
//! Hessian, for comparing trained and random-init Hessian spectra.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dense_eigh, relative_asymmetry};
use crate::powerlaw::{fit_and_test, KsVerdict, PowerLawFit};
use crate::spectrum::{Source, Spectrum};

pub const DEFAULT_SIZES: [usize; 4] = [10, 16, 16, 2];
pub const DEFAULT_SAMPLES: usize = 200;
pub const DEFAULT_STEPS: usize = 5000;
pub const DEFAULT_LR: f64 = 0.5;
pub const DEFAULT_FD_STEP: f64 = 1e-5;
pub const ASYMMETRY_LIMIT: f64 = 1e-4;
pub const CONTRAST_K: usize = 100;
/// Half the distance between the two class means along the first axis.
pub const BLOB_OFFSET: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpState {
    pub sizes: Vec<usize>,
    /// Per layer: weights (row-major, `fan_out x fan_in`) then biases.
    pub theta: Vec<f64>,
    pub seed: u64,
    pub loss: Option<f64>,
}

pub fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| (w[0] + 1) * w[1]).sum()
}

impl MlpState {
    /// Weights drawn from `N(0, 1/fan_in)`, biases zero.
    pub fn init(sizes: &[usize], seed: u64) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::InvalidConfig(format!("bad layer sizes {sizes:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut theta = Vec::with_capacity(param_count(sizes));
        for w in sizes.windows(2) {
            let scale = 1.0 / (w[0] as f64).sqrt();
            for _ in 0..w[0] * w[1] {
                let z: f64 = StandardNormal.sample(&mut rng);
                theta.push(z * scale);
            }
            theta.extend(std::iter::repeat_n(0.0, w[1]));
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            theta,
            seed,
            loss: None,
        })
    }

    pub fn zeros(sizes: &[usize]) -> Self {
        Self {
            sizes: sizes.to_vec(),
            theta: vec![0.0; param_count(sizes)],
            seed: 0,
            loss: None,
        }
    }

    pub fn n_params(&self) -> usize {
        self.theta.len()
    }

    /// Reorders the units of hidden layer `layer` (1-based among the layer
    /// sizes), moving the incoming and outgoing weights with them.
    pub fn permute_hidden(&self, layer: usize, perm: &[usize]) -> Result<Self> {
        if layer == 0 || layer + 1 >= self.sizes.len() || perm.len() != self.sizes[layer] {
            return Err(Error::InvalidConfig("permutation does not match a hidden layer".into()));
        }
        let offsets = layer_offsets(&self.sizes);
        let mut out = self.clone();
        let (fan_in, width) = (self.sizes[layer - 1], self.sizes[layer]);
        let (w_in, b_in) = offsets[layer - 1];
        for (new, &old) in perm.iter().enumerate() {
            for c in 0..fan_in {
                out.theta[w_in + new * fan_in + c] = self.theta[w_in + old * fan_in + c];
            }
            out.theta[b_in + new] = self.theta[b_in + old];
        }
        let next = self.sizes[layer + 1];
        let (w_out, _) = offsets[layer];
        for r in 0..next {
            for (new, &old) in perm.iter().enumerate() {
                out.theta[w_out + r * width + new] = self.theta[w_out + r * width + old];
            }
        }
        Ok(out)
    }
}

/// Start of each layer's weights and biases inside `theta`.
fn layer_offsets(sizes: &[usize]) -> Vec<(usize, usize)> {
    let mut at = 0;
    sizes
        .windows(2)
        .map(|w| {
            let weights = at;
            let biases = at + w[0] * w[1];
            at = biases + w[1];
            (weights, biases)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyDataset {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<usize>,
}

impl ToyDataset {
    /// Two unit-covariance Gaussian blobs centred at `±BLOB_OFFSET` on the
    /// first axis, labels alternating so classes stay balanced.
    pub fn blobs(n: usize, dim: usize, seed: u64) -> Result<Self> {
        if n == 0 || dim == 0 {
            return Err(Error::InvalidConfig("dataset needs samples and features".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let label = i % 2;
            let mut row: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            row[0] += if label == 1 { BLOB_OFFSET } else { -BLOB_OFFSET };
            x.push(row);
            y.push(label);
        }
        Ok(Self { x, y })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Every sample repeated twice.
    pub fn duplicated(&self) -> Self {
        Self {
            x: self.x.iter().chain(&self.x).cloned().collect(),
            y: self.y.iter().chain(&self.y).copied().collect(),
        }
    }
}

fn check_shapes(sizes: &[usize], theta: &[f64], d: &ToyDataset) -> Result<()> {
    if theta.len() != param_count(sizes) {
        return Err(Error::DimensionMismatch {
            expected: param_count(sizes),
            got: theta.len(),
        });
    }
    if d.is_empty() {
        return Err(Error::EmptyInput);
    }
    let classes = sizes[sizes.len() - 1];
    for (x, y) in d.x.iter().zip(&d.y) {
        if x.len() != sizes[0] {
            return Err(Error::DimensionMismatch {
                expected: sizes[0],
                got: x.len(),
            });
        }
        if *y >= classes {
            return Err(Error::InvalidConfig(format!("label {y} out of range")));
        }
    }
    Ok(())
}

/// Softmax cross-entropy of one sample and its gradient in the logits.
///
/// Written relative to the true logit so a nearly perfect fit keeps full
/// relative precision: the loss is `ln(1 + sum exp(z_j - z_y))` rather than
/// the difference of two large numbers.
fn cross_entropy(logits: &[f64], label: usize) -> (f64, Vec<f64>) {
    let zy = logits[label];
    let shift = logits
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != label)
        .map(|(_, z)| z - zy)
        .fold(0.0, f64::max);
    let others: f64 = logits
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != label)
        .map(|(_, z)| (z - zy - shift).exp())
        .sum();
    let loss = if shift == 0.0 {
        others.ln_1p()
    } else {
        shift + ((-shift).exp() + others).ln()
    };
    let mut delta: Vec<f64> = logits.iter().map(|z| (z - zy - loss).exp()).collect();
    delta[label] = 0.0;
    delta[label] = -delta.iter().sum::<f64>();
    (loss, delta)
}

/// Mean softmax cross-entropy and its gradient by backpropagation.
pub fn loss_and_grad_at(sizes: &[usize], theta: &[f64], d: &ToyDataset) -> Result<(f64, Vec<f64>)> {
    check_shapes(sizes, theta, d)?;
    let offsets = layer_offsets(sizes);
    let layers = sizes.len() - 1;
    let mut grad = vec![0.0; theta.len()];
    let mut loss = 0.0;
    let mut acts: Vec<Vec<f64>> = vec![Vec::new(); layers + 1];
    for (x, &label) in d.x.iter().zip(&d.y) {
        acts[0].clone_from(x);
        for l in 0..layers {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let (w, b) = offsets[l];
            let mut z: Vec<f64> = (0..fan_out)
                .map(|r| {
                    let row = &theta[w + r * fan_in..w + (r + 1) * fan_in];
                    theta[b + r] + row.iter().zip(&acts[l]).map(|(a, v)| a * v).sum::<f64>()
                })
                .collect();
            if l + 1 < layers {
                z.iter_mut().for_each(|v| *v = v.tanh());
            }
            acts[l + 1] = z;
        }
        let (sample_loss, delta) = cross_entropy(&acts[layers], label);
        loss += sample_loss;
        let mut delta = delta;
        for l in (0..layers).rev() {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let (w, b) = offsets[l];
            for r in 0..fan_out {
                grad[b + r] += delta[r];
                for c in 0..fan_in {
                    grad[w + r * fan_in + c] += delta[r] * acts[l][c];
                }
            }
            if l > 0 {
                delta = (0..fan_in)
                    .map(|c| {
                        let back: f64 = (0..fan_out).map(|r| theta[w + r * fan_in + c] * delta[r]).sum();
                        back * (1.0 - acts[l][c] * acts[l][c])
                    })
                    .collect();
            }
        }
    }
    let n = d.len() as f64;
    grad.iter_mut().for_each(|g| *g /= n);
    Ok((loss / n, grad))
}

pub fn loss_and_grad(m: &MlpState, d: &ToyDataset) -> Result<(f64, Vec<f64>)> {
    loss_and_grad_at(&m.sizes, &m.theta, d)
}

/// Full-batch gradient descent; returns the final state and the loss before
/// every step plus the final loss.
pub fn train_with_curve(m: &MlpState, d: &ToyDataset, steps: usize, lr: f64) -> Result<(MlpState, Vec<f64>)> {
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(Error::InvalidConfig(format!("learning rate must be positive, got {lr}")));
    }
    let mut out = m.clone();
    let mut curve = Vec::with_capacity(steps + 1);
    for step in 0..steps {
        let (loss, grad) = loss_and_grad(&out, d)?;
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Divergence { step });
        }
        curve.push(loss);
        out.theta.iter_mut().zip(&grad).for_each(|(t, g)| *t -= lr * g);
    }
    if steps > 0 {
        let (loss, _) = loss_and_grad(&out, d)?;
        if !loss.is_finite() {
            return Err(Error::Divergence { step: steps });
        }
        curve.push(loss);
        out.loss = Some(loss);
    }
    Ok((out, curve))
}

pub fn train(m: &MlpState, d: &ToyDataset, steps: usize, lr: f64) -> Result<MlpState> {
    train_with_curve(m, d, steps, lr).map(|(s, _)| s)
}

/// Anything that can produce a gradient at a point.
pub trait GradientOracle: Sync {
    fn dim(&self) -> usize;
    fn gradient(&self, theta: &[f64]) -> Vec<f64>;
}

pub struct MlpObjective<'a> {
    pub sizes: &'a [usize],
    pub data: &'a ToyDataset,
}

impl GradientOracle for MlpObjective<'_> {
    fn dim(&self) -> usize {
        param_count(self.sizes)
    }

    fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        loss_and_grad_at(self.sizes, theta, self.data)
            .expect("shapes were validated before differentiation")
            .1
    }
}

fn fd_step(h: f64, t: f64) -> f64 {
    h * (1.0 + t.abs())
}

#[derive(Debug, Clone)]
pub struct FdHessian {
    /// Symmetrized Hessian.
    pub matrix: DMatrix<f64>,
    /// Relative asymmetry before symmetrization.
    pub asymmetry: f64,
}

/// Central differences of the gradient, one column per coordinate, then
/// symmetrized. Fails if the raw matrix is asymmetric beyond
/// [`ASYMMETRY_LIMIT`].
pub fn hessian_fd<G: GradientOracle + ?Sized>(oracle: &G, theta: &[f64], h: f64) -> Result<FdHessian> {
    let n = oracle.dim();
    if theta.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: theta.len(),
        });
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidConfig(format!("step must be positive, got {h}")));
    }
    let columns: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let hi = fd_step(h, theta[i]);
            let mut t = theta.to_vec();
            t[i] = theta[i] + hi;
            let plus = oracle.gradient(&t);
            t[i] = theta[i] - hi;
            let minus = oracle.gradient(&t);
            plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * hi)).collect()
        })
        .collect();
    let raw = DMatrix::from_fn(n, n, |r, c| columns[c][r]);
    let asymmetry = relative_asymmetry(&raw)?;
    if asymmetry > ASYMMETRY_LIMIT {
        return Err(Error::AsymmetryTooLarge {
            asymmetry,
            limit: ASYMMETRY_LIMIT,
        });
    }
    let matrix = (&raw + raw.transpose()) * 0.5;
    Ok(FdHessian { matrix, asymmetry })
}

pub fn hessian(m: &MlpState, d: &ToyDataset, h: f64) -> Result<FdHessian> {
    check_shapes(&m.sizes, &m.theta, d)?;
    hessian_fd(&MlpObjective { sizes: &m.sizes, data: d }, &m.theta, h)
}

/// Largest relative error between the analytic gradient and central
/// differences of the loss over `coords` randomly chosen coordinates.
///
/// The error is `|g - g_fd| / max(|g|, |g_fd|, GRAD_CHECK_FLOOR)`; the floor
/// keeps coordinates whose gradient is numerically zero from dividing noise
/// by noise.
pub fn gradient_check(m: &MlpState, d: &ToyDataset, coords: usize, h: f64, seed: u64) -> Result<f64> {
    let (_, grad) = loss_and_grad(m, d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..coords {
        let i = rng.random_range(0..m.n_params());
        let hi = fd_step(h, m.theta[i]);
        let mut t = m.theta.clone();
        t[i] += hi;
        let (up, _) = loss_and_grad_at(&m.sizes, &t, d)?;
        t[i] = m.theta[i] - hi;
        let (down, _) = loss_and_grad_at(&m.sizes, &t, d)?;
        let fd = (up - down) / (2.0 * hi);
        let scale = grad[i].abs().max(fd.abs()).max(GRAD_CHECK_FLOOR);
        worst = worst.max((grad[i] - fd).abs() / scale);
    }
    Ok(worst)
}

pub const GRAD_CHECK_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContrastConfig {
    pub samples: usize,
    pub steps: usize,
    pub lr: f64,
    pub k: usize,
    pub fd_step: f64,
}

impl Default for ContrastConfig {
    fn default() -> Self {
        Self {
            samples: DEFAULT_SAMPLES,
            steps: DEFAULT_STEPS,
            lr: DEFAULT_LR,
            k: CONTRAST_K,
            fd_step: DEFAULT_FD_STEP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastSide {
    pub loss: f64,
    pub fit: PowerLawFit<f64>,
    pub ks: KsVerdict<f64>,
    pub positive_eigenvalues: usize,
    pub asymmetry: f64,
    pub grad_check: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastReport {
    pub seed: u64,
    pub n_params: usize,
    pub config: ContrastConfig,
    pub random: ContrastSide,
    pub trained: ContrastSide,
}

pub struct ContrastOutcome {
    pub report: ContrastReport,
    pub random_spectrum: Spectrum<f64>,
    pub trained_spectrum: Spectrum<f64>,
}

fn analyze_side(
    m: &MlpState,
    d: &ToyDataset,
    cfg: &ContrastConfig,
    alpha: f64,
    seed: u64,
) -> Result<(ContrastSide, Spectrum<f64>)> {
    let (loss, _) = loss_and_grad(m, d)?;
    let h = hessian(m, d, cfg.fd_step)?;
    let trace: f64 = (0..h.matrix.nrows()).map(|i| h.matrix[(i, i)]).sum();
    let spectrum = dense_eigh(&h.matrix)?;
    let spectrum = Spectrum::new(spectrum.values().to_vec(), Source::Mlp)?
        .with_n_total(h.matrix.nrows())
        .with_trace_hint(trace);
    let (fit, ks) = fit_and_test(&spectrum, cfg.k, alpha)?;
    let side = ContrastSide {
        loss,
        fit,
        ks,
        positive_eigenvalues: spectrum.values().iter().filter(|v| **v > 0.0).count(),
        asymmetry: h.asymmetry,
        grad_check: gradient_check(m, d, 20, cfg.fd_step, seed)?,
    };
    Ok((side, spectrum))
}

/// Random-init and trained Hessian spectra for one seed, each fitted and
/// KS-tested on its top `cfg.k` eigenvalues.
pub fn spectrum_contrast(seed: u64, alpha: f64, cfg: &ContrastConfig) -> Result<ContrastOutcome> {
    let data = ToyDataset::blobs(cfg.samples, DEFAULT_SIZES[0], seed)?;
    let init = MlpState::init(&DEFAULT_SIZES, seed)?;
    let trained = train(&init, &data, cfg.steps, cfg.lr)?;
    let (random, random_spectrum) = analyze_side(&init, &data, cfg, alpha, seed)?;
    let (trained_side, trained_spectrum) = analyze_side(&trained, &data, cfg, alpha, seed)?;
    Ok(ContrastOutcome {
        report: ContrastReport {
            seed,
            n_params: init.n_params(),
            config: *cfg,
            random,
            trained: trained_side,
        },
        random_spectrum,
        trained_spectrum,
    })
}
