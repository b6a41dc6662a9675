//! Anisotropic network model of protein C-alpha traces and the power-law
//! analysis of its inverse vibrational spectrum.

pub mod batch;
pub mod model;
pub mod pdb;

pub use batch::{
    aggregate, analyze_path, analyze_structure, batch_analyze, AnmConfig, BatchFailure, BatchReport, ProteinAnalysis,
    ProteinRow, StratumSummary, STRATA,
};
pub use model::{
    build_anm, protein_powerlaw, vibrational_spectrum, AnmModel, ProteinFit, VibrationalSpectrum, DEFAULT_CUTOFF,
    DEFAULT_KAPPA, DEFAULT_ZERO_TOL, MIN_FIT_MODES, RIGID_MODES,
};
pub use pdb::{parse_pdb, read_pdb, ProteinStructure, Residue};
