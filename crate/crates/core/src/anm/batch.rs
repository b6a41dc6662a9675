use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{
    build_anm, protein_powerlaw, vibrational_spectrum, ProteinFit, VibrationalSpectrum, DEFAULT_CUTOFF,
    DEFAULT_KAPPA, DEFAULT_ZERO_TOL,
};
use super::pdb::{read_pdb, ProteinStructure};
use crate::error::{Error, Result};
use crate::powerlaw::DEFAULT_ALPHA;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnmConfig {
    pub cutoff: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub zero_tol: f64,
    /// Number of fitted eigenvalues; `None` means a tenth of the modes.
    pub k: Option<usize>,
}

impl Default for AnmConfig {
    fn default() -> Self {
        Self {
            cutoff: DEFAULT_CUTOFF,
            kappa: DEFAULT_KAPPA,
            alpha: DEFAULT_ALPHA,
            zero_tol: DEFAULT_ZERO_TOL,
            k: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProteinRow {
    pub pdb_id: String,
    pub n_residues: usize,
    pub k_fit: usize,
    pub beta_hat: f64,
    pub sigma: f64,
    pub s_hat: f64,
    pub d_ks: f64,
    pub d_c: f64,
    /// `"accept"` when the power-law hypothesis survives the KS test.
    pub verdict: String,
}

impl ProteinRow {
    pub fn from_fit(p: &ProteinStructure, f: &ProteinFit) -> Self {
        Self {
            pdb_id: p.id.clone(),
            n_residues: p.len(),
            k_fit: f.fit.k_samples,
            beta_hat: f.fit.beta_hat,
            sigma: f.fit.sigma,
            s_hat: f.fit.s_hat,
            d_ks: f.verdict.d_ks,
            d_c: f.verdict.d_c,
            verdict: if f.verdict.is_power_law { "accept" } else { "reject" }.into(),
        }
    }

    pub fn accepted(&self) -> bool {
        self.verdict == "accept"
    }
}

pub struct ProteinAnalysis {
    pub structure: ProteinStructure,
    pub spectrum: VibrationalSpectrum,
    pub fit: ProteinFit,
    pub row: ProteinRow,
}

pub fn analyze_structure(p: ProteinStructure, cfg: &AnmConfig) -> Result<ProteinAnalysis> {
    let model = build_anm(&p, cfg.cutoff, cfg.kappa)?;
    let spectrum = vibrational_spectrum(&model, cfg.zero_tol)?;
    let fit = protein_powerlaw(&spectrum, cfg.alpha, cfg.k)?;
    let row = ProteinRow::from_fit(&p, &fit);
    Ok(ProteinAnalysis {
        structure: p,
        spectrum,
        fit,
        row,
    })
}

pub fn analyze_path(path: &Path, cfg: &AnmConfig) -> Result<ProteinAnalysis> {
    analyze_structure(read_pdb(path)?, cfg)
}

/// Size brackets over `3 * N_AA`; the last bracket includes its upper end.
pub const STRATA: [(usize, usize); 3] = [(300, 1000), (1000, 3000), (3000, 6000)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumSummary {
    pub label: String,
    pub count: usize,
    pub mean_s_hat: Option<f64>,
    pub std_s_hat: Option<f64>,
    pub mean_beta_hat: Option<f64>,
    pub std_beta_hat: Option<f64>,
    pub mean_dks_over_dc: Option<f64>,
    pub accepted: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchFailure {
    pub source: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub rows: Vec<ProteinRow>,
    pub failures: Vec<BatchFailure>,
    pub strata: Vec<StratumSummary>,
    pub overall: StratumSummary,
}

fn mean_std(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = (xs.len() > 1).then(|| (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
    (Some(mean), std)
}

fn summarize(label: String, rows: &[&ProteinRow]) -> StratumSummary {
    let s: Vec<f64> = rows.iter().map(|r| r.s_hat).collect();
    let b: Vec<f64> = rows.iter().map(|r| r.beta_hat).collect();
    let ratio: Vec<f64> = rows.iter().map(|r| r.d_ks / r.d_c).collect();
    let (mean_s_hat, std_s_hat) = mean_std(&s);
    let (mean_beta_hat, std_beta_hat) = mean_std(&b);
    StratumSummary {
        label,
        count: rows.len(),
        mean_s_hat,
        std_s_hat,
        mean_beta_hat,
        std_beta_hat,
        mean_dks_over_dc: mean_std(&ratio).0,
        accepted: rows.iter().filter(|r| r.accepted()).count(),
    }
}

fn in_stratum(n_residues: usize, (lo, hi): (usize, usize), last: bool) -> bool {
    let dof = 3 * n_residues;
    dof >= lo && (dof < hi || (last && dof == hi))
}

pub fn aggregate(rows: Vec<ProteinRow>, failures: Vec<BatchFailure>) -> BatchReport {
    let strata = STRATA
        .iter()
        .enumerate()
        .map(|(i, &(lo, hi))| {
            let last = i + 1 == STRATA.len();
            let members: Vec<&ProteinRow> = rows.iter().filter(|r| in_stratum(r.n_residues, (lo, hi), last)).collect();
            let close = if last { ']' } else { ')' };
            summarize(format!("[{lo}, {hi}{close}"), &members)
        })
        .collect();
    let overall = summarize("all".into(), &rows.iter().collect::<Vec<_>>());
    BatchReport {
        rows,
        failures,
        strata,
        overall,
    }
}

/// Analyzes every file in parallel on `jobs` workers (all cores when
/// `None`). Per-file failures are collected rather than aborting the batch.
pub fn batch_analyze(paths: &[PathBuf], cfg: &AnmConfig, jobs: Option<usize>) -> Result<BatchReport> {
    if paths.is_empty() {
        return Err(Error::EmptyInput);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let results: Vec<(PathBuf, Result<ProteinRow>)> = pool.install(|| {
        paths
            .par_iter()
            .map(|p| (p.clone(), analyze_path(p, cfg).map(|a| a.row)))
            .collect()
    });
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (path, r) in results {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => failures.push(BatchFailure {
                source: path.display().to_string(),
                error: e.to_string(),
            }),
        }
    }
    Ok(aggregate(rows, failures))
}
