use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,
    #[error("non-finite value at index {index}")]
    NonFiniteValue { index: usize },
    #[error("eigenvalue {value} at index {index} is not strictly positive")]
    NonPositiveEigenvalue { index: usize, value: f64 },
    #[error("invalid count: {0}")]
    InvalidCount(String),
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("operator is not symmetric (relative discrepancy {discrepancy:e})")]
    NotSymmetric { discrepancy: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("Lanczos did not converge: {converged} of {requested} Ritz values within tolerance")]
    Stagnation {
        /// Best available Ritz values, descending, unconverged ones included.
        partial: Vec<f64>,
        converged: usize,
        requested: usize,
    },

    #[error("degenerate sample: all retained values are equal")]
    DegenerateSample,
    #[error("unsupported significance level {0} (tabulated: 0.2, 0.15, 0.1, 0.05, 0.01)")]
    UnsupportedAlpha(f64),
    #[error("fit uses {fit_k} samples but the spectrum has only {available}")]
    MismatchedFit { fit_k: usize, available: usize },
    #[error("need at least 2 retained values, got {0}")]
    InsufficientLength(usize),
    #[error("no trace available: spectrum carries no trace hint and top-K sum was not allowed")]
    MissingTrace,
    #[error("rank {rank} out of range 2..={max}")]
    RankOutOfRange { rank: usize, max: usize },

    #[error("perturbation infeasible: {0}")]
    PerturbationInfeasible(String),

    #[error("no C-alpha atoms found")]
    NoCaAtoms,
    #[error("malformed record on line {line}: {message}")]
    MalformedRecord { line: usize, message: String },
    #[error("residues {i} and {j} are coincident")]
    CoincidentResidues { i: usize, j: usize },
    #[error("expected 6 rigid-body zero modes, found {0}")]
    UnexpectedZeroModes(usize),
    #[error("too few vibrational modes for a fit: {modes} (need at least {required})")]
    TooFewModes { modes: usize, required: usize },

    #[error("training diverged at step {step}")]
    Divergence { step: usize },
    #[error("finite-difference Hessian asymmetry {asymmetry:e} exceeds {limit:e}")]
    AsymmetryTooLarge { asymmetry: f64, limit: f64 },
}
