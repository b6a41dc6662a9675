//! Command implementations behind the `powerspec` binary. Each command
//! returns a [`Report`]; `main` prints it and maps it to an exit code.

pub mod fetch;
pub mod matrix;

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use powerspec::anm::{self, AnmConfig};
use powerspec::eigengap::{dk_bound, dk_bound_powerlaw, fit_gap_law, gap_law_predicted, gaps};
use powerspec::lanczos::{lanczos_topk, LanczosConfig};
use powerspec::maxent::{stationarity_check, PerturbationMode, StationarityConfig, DEFAULT_GRID_SIZE};
use powerspec::mlp::{self, ContrastConfig};
use powerspec::powerlaw::{fit_and_test, ks_test_sorted, mle_fit, zipf_slope_regression, DEFAULT_ALPHA, DEFAULT_K};
use powerspec::spectrum::{rank_size_csv, read_spectrum, write_spectrum};
use powerspec::{Report, Spectrum};

pub const EXIT_ACCEPT: i32 = 0;
pub const EXIT_ERROR: i32 = 2;
pub const EXIT_REJECT: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "powerspec", version, about = "Power-law analysis of Hessian spectra")]
pub struct Cli {
    /// Increase log verbosity on stderr (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a power law to the top-k values of a spectrum file and KS-test it.
    Fit(FitArgs),
    /// Eigengap series, its power-law fit and optional Davis-Kahan bounds.
    Gaps(GapsArgs),
    /// Elastic network analysis of one protein (file path or PDB code).
    Anm(AnmArgs),
    /// Elastic network analysis of many PDB files with size-stratified summaries.
    Batch(BatchArgs),
    /// Trained versus random-init Hessian spectra of a small tanh network.
    Mlp(MlpArgs),
    /// Top-k eigenvalues of a dense symmetric matrix file by Lanczos.
    Lanczos(LanczosArgs),
    /// Numerical stationarity check of the power-law entropy maximizer.
    Maxent(MaxentArgs),
}

#[derive(Debug, Args)]
pub struct FitArgs {
    pub spectrum: PathBuf,
    /// Number of top values to fit (default: min(1000, length)).
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Write the rank-size pairs of the fitted values as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GapsArgs {
    pub spectrum: PathBuf,
    /// Number of top eigenvalues to take gaps from (default: all).
    #[arg(long)]
    pub k: Option<usize>,
    /// Number of re-sorted gaps to fit (default: min(1000, gaps)).
    #[arg(long)]
    pub fit_k: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Gaps in eigenvalue-rank order as CSV.
    #[arg(long)]
    pub by_rank_csv: Option<PathBuf>,
    /// Gaps re-sorted by magnitude as CSV.
    #[arg(long)]
    pub resorted_csv: Option<PathBuf>,
    /// Perturbation size eps*||M||; adds a Davis-Kahan table to the report.
    #[arg(long)]
    pub eps_m: Option<f64>,
    /// Ranks for the Davis-Kahan table.
    #[arg(long, value_delimiter = ',', default_values_t = [2usize, 5, 10, 20, 50, 100, 200, 500, 1000])]
    pub dk_ranks: Vec<usize>,
}

#[derive(Debug, Args)]
pub struct AnmArgs {
    /// PDB file path or 4-character PDB code.
    pub structure: String,
    #[arg(long, default_value_t = anm::DEFAULT_CUTOFF)]
    pub cutoff: f64,
    #[arg(long, default_value_t = anm::DEFAULT_KAPPA)]
    pub kappa: f64,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Fitted eigenvalue count (default: a tenth of the nonzero modes).
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = anm::DEFAULT_ZERO_TOL)]
    pub zero_tol: f64,
    /// Write normalized inverse-spectrum rank-size pairs as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Directory for downloaded structures.
    #[arg(long, env = fetch::CACHE_ENV)]
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    #[arg(required = true)]
    pub paths: Vec<PathBuf>,
    #[arg(long, default_value_t = anm::DEFAULT_CUTOFF)]
    pub cutoff: f64,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Worker threads (default: logical cores).
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct MlpArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = mlp::DEFAULT_STEPS)]
    pub steps: usize,
    #[arg(long, default_value_t = mlp::DEFAULT_LR)]
    pub lr: f64,
    #[arg(long, default_value_t = mlp::DEFAULT_SAMPLES)]
    pub samples: usize,
    #[arg(long, default_value_t = mlp::CONTRAST_K)]
    pub k: usize,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Directory for the two spectrum files.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LanczosArgs {
    pub matrix: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Spectrum file to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MaxentArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub beta_vol: f64,
    /// Support bounds as "lo,hi".
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 100.0])]
    pub support: Vec<f64>,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    #[arg(long, default_value_t = DEFAULT_GRID_SIZE)]
    pub grid: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Skip the zero-mass projection (control experiment).
    #[arg(long)]
    pub unconstrained: bool,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Fit(_) => "fit",
            Command::Gaps(_) => "gaps",
            Command::Anm(_) => "anm",
            Command::Batch(_) => "batch",
            Command::Mlp(_) => "mlp",
            Command::Lanczos(_) => "lanczos",
            Command::Maxent(_) => "maxent",
        }
    }
}

/// Exit code for a finished report: reject when its KS verdict (or, for
/// commands without one, `extras.accept`) is false.
pub fn exit_code(report: &Report) -> i32 {
    let accepted = report
        .accepted()
        .or_else(|| report.extras.get("accept").and_then(|v| v.as_bool()));
    match accepted {
        Some(false) => EXIT_REJECT,
        _ => EXIT_ACCEPT,
    }
}

#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub command: String,
    pub error: String,
}

pub fn run(cmd: &Command) -> Result<Report> {
    let start = Instant::now();
    let mut report = match cmd {
        Command::Fit(a) => cmd_fit(a),
        Command::Gaps(a) => cmd_gaps(a),
        Command::Anm(a) => cmd_anm(a),
        Command::Batch(a) => cmd_batch(a),
        Command::Mlp(a) => cmd_mlp(a),
        Command::Lanczos(a) => cmd_lanczos(a),
        Command::Maxent(a) => cmd_maxent(a),
    }?;
    report.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(report)
}

fn digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

fn record_file(report: &mut Report, key: &str, path: &Path) -> Result<()> {
    report.input(key, path.display().to_string());
    report.input(&format!("{key}_sha256"), digest(path)?);
    Ok(())
}

fn load_spectrum(path: &Path) -> Result<Spectrum> {
    read_spectrum(path).with_context(|| format!("reading spectrum {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn cmd_fit(a: &FitArgs) -> Result<Report> {
    let s = load_spectrum(&a.spectrum)?;
    let k = a.k.unwrap_or(DEFAULT_K.min(s.len()));
    let (fit, ks) = fit_and_test(&s, k, a.alpha)?;
    let mut r = Report::new("fit").with_fit(&fit, &ks);
    record_file(&mut r, "spectrum", &a.spectrum)?;
    r.input("k", k);
    r.input("alpha", a.alpha);
    r.extra("source", s.source().as_str());
    r.extra("n_values", s.len());
    r.extra("n_total", s.n_total());
    if k >= 3 {
        r.extra("s_regression", zipf_slope_regression(&s, k).ok());
    }
    if let Some(csv) = &a.csv {
        write_text(csv, &rank_size_csv(&s.values()[..k]))?;
        r.extra("csv", csv.display().to_string());
    }
    Ok(r)
}

#[derive(Serialize)]
struct DkRow {
    k: usize,
    bound: f64,
    bound_powerlaw: Option<f64>,
}

fn cmd_gaps(a: &GapsArgs) -> Result<Report> {
    let s = load_spectrum(&a.spectrum)?;
    let k = a.k.unwrap_or(s.len());
    let g = gaps(&s, k)?;
    let fit_k = a.fit_k.unwrap_or(DEFAULT_K.min(g.len()));
    let fit = fit_gap_law(&g, fit_k)?;
    let resorted = g.resorted();
    let ks = ks_test_sorted(&resorted, &fit, a.alpha)?;
    let mut r = Report::new("gaps").with_fit(&fit, &ks);
    record_file(&mut r, "spectrum", &a.spectrum)?;
    r.input("k", k);
    r.input("fit_k", fit_k);
    r.input("alpha", a.alpha);
    r.extra("n_gaps", g.len());
    r.extra("telescoped", g.by_rank().iter().sum::<f64>());

    // the eigenvalue law predicts a gap exponent one larger
    let eig_fit = mle_fit(&s, DEFAULT_K.min(k)).ok();
    if let Some(ef) = &eig_fit {
        r.extra("eigen_s_hat", ef.s_hat);
        r.extra("predicted_gap_s_hat", ef.s_hat + 1.0);
        let predictions: Vec<_> = [1usize, 10, 100]
            .into_iter()
            .filter(|&rank| rank < k)
            .filter_map(|rank| {
                let p = gap_law_predicted(&s, ef, rank, true).ok()?;
                Some(serde_json::json!({
                    "k": rank,
                    "observed": g.by_rank()[rank - 1],
                    "exact": p.exact,
                    "approx": p.approx,
                    "trace_source": p.trace_source,
                }))
            })
            .collect();
        r.extra("gap_predictions", predictions);
    }
    if let Some(eps_m) = a.eps_m {
        let mut rows = Vec::new();
        for &rank in &a.dk_ranks {
            if rank < 2 || rank + 1 > k {
                continue;
            }
            let b = dk_bound(&s, rank, eps_m)?;
            rows.push(DkRow {
                k: rank,
                bound: b.bound,
                bound_powerlaw: eig_fit.as_ref().map(|f| dk_bound_powerlaw(f, s.values()[0], rank, eps_m)),
            });
        }
        r.input("eps_m", eps_m);
        r.extra("davis_kahan", rows);
    }
    if let Some(p) = &a.by_rank_csv {
        write_text(p, &rank_size_csv(g.by_rank()))?;
        r.extra("by_rank_csv", p.display().to_string());
    }
    if let Some(p) = &a.resorted_csv {
        write_text(p, &rank_size_csv(&resorted))?;
        r.extra("resorted_csv", p.display().to_string());
    }
    Ok(r)
}

fn cmd_anm(a: &AnmArgs) -> Result<Report> {
    if !(a.cutoff > 0.0 && a.cutoff.is_finite()) {
        bail!("--cutoff must be positive, got {}", a.cutoff);
    }
    let path = fetch::resolve_structure(&a.structure, a.cache_dir.as_deref())?;
    let cfg = AnmConfig {
        cutoff: a.cutoff,
        kappa: a.kappa,
        alpha: a.alpha,
        zero_tol: a.zero_tol,
        k: a.k,
    };
    let analysis = anm::analyze_path(&path, &cfg).with_context(|| format!("analyzing {}", path.display()))?;
    let mut r = Report::new("anm").with_fit(&analysis.fit.fit, &analysis.fit.verdict);
    r.input("structure", &a.structure);
    record_file(&mut r, "pdb", &path)?;
    r.input("config", cfg);
    r.extra("row", &analysis.row);
    r.extra("n_modes", analysis.spectrum.n_modes());
    r.extra("zero_modes", analysis.spectrum.zero_modes);
    r.extra("lambda_max", analysis.spectrum.eigenvalues.last().copied());
    if let Some(csv) = &a.csv {
        write_text(csv, &rank_size_csv(&analysis.spectrum.normalized()))?;
        r.extra("csv", csv.display().to_string());
    }
    Ok(r)
}

fn cmd_batch(a: &BatchArgs) -> Result<Report> {
    let cfg = AnmConfig {
        cutoff: a.cutoff,
        alpha: a.alpha,
        ..AnmConfig::default()
    };
    let batch = anm::batch_analyze(&a.paths, &cfg, a.jobs)?;
    for f in &batch.failures {
        log::warn!("{}: {}", f.source, f.error);
    }
    if batch.rows.is_empty() {
        bail!("no structure could be analyzed ({} failures)", batch.failures.len());
    }
    let mut r = Report::new("batch");
    r.input("paths", &a.paths);
    r.input("config", cfg);
    r.extra("accept", batch.rows.iter().all(|row| row.accepted()));
    r.extra("batch", &batch);
    Ok(r)
}

fn cmd_mlp(a: &MlpArgs) -> Result<Report> {
    let cfg = ContrastConfig {
        samples: a.samples,
        steps: a.steps,
        lr: a.lr,
        k: a.k,
        ..ContrastConfig::default()
    };
    let out = mlp::spectrum_contrast(a.seed, a.alpha, &cfg)?;
    let c = &out.report;
    let mut r = Report::new("mlp").with_fit(&c.trained.fit, &c.trained.ks);
    r.input("seed", a.seed);
    r.input("config", cfg);
    r.input("alpha", a.alpha);
    r.extra("contrast", c);
    if let Some(dir) = &a.out_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let random = dir.join(format!("mlp_random_seed{}.txt", a.seed));
        let trained = dir.join(format!("mlp_trained_seed{}.txt", a.seed));
        write_spectrum(&out.random_spectrum, &random)?;
        write_spectrum(&out.trained_spectrum, &trained)?;
        r.extra("random_spectrum", random.display().to_string());
        r.extra("trained_spectrum", trained.display().to_string());
    }
    Ok(r)
}

fn cmd_lanczos(a: &LanczosArgs) -> Result<Report> {
    let m = matrix::read_matrix(&a.matrix)?;
    let mut cfg = LanczosConfig::new(a.k).seed(a.seed);
    cfg.tol = a.tol;
    if let Some(it) = a.max_iters {
        cfg = cfg.max_iters(it);
    }
    let s: Spectrum = lanczos_topk(&m, &cfg)?;
    let mut r = Report::new("lanczos");
    record_file(&mut r, "matrix", &a.matrix)?;
    r.input("k", a.k);
    r.input("seed", a.seed);
    r.input("tol", a.tol);
    r.extra("dimension", m.nrows());
    r.extra("values", s.values());
    if let Some(out) = &a.out {
        write_spectrum(&s, out)?;
        r.extra("out", out.display().to_string());
    }
    Ok(r)
}

fn cmd_maxent(a: &MaxentArgs) -> Result<Report> {
    let [lo, hi] = a.support[..] else {
        bail!("--support takes exactly two values");
    };
    let cfg = StationarityConfig {
        beta_vol: a.beta_vol,
        support: (lo, hi),
        grid_size: a.grid,
        trials: a.trials,
        eps: a.eps,
        seed: a.seed,
        mode: if a.unconstrained {
            PerturbationMode::Unconstrained
        } else {
            PerturbationMode::Projected
        },
    };
    let report = stationarity_check(&cfg)?;
    let mut r = Report::new("maxent");
    r.input("config", cfg);
    r.extra("accept", report.pass);
    r.extra("stationarity", &report);
    Ok(r)
}
