//! Numerics for equilibrium states of non-uniformly expanding interval and
//! circle maps: conformal measures via the transfer operator, hyperbolic-time
//! statistics, Gibbs-ratio checks, and stability sweeps.

pub mod config;
pub mod dynamics;
pub mod equilibrium;
pub mod error;
pub mod geometry;
pub mod gibbs;
pub mod hyptimes;
pub mod potentials;
pub mod report;
pub mod rng;
pub mod runner;
pub mod stability;
pub mod transfer;

pub use dynamics::{
    auto_sigma, builtin_map, check_hypotheses, degree_floor, suggested_gamma, BranchSpec,
    HypothesisReport, IntervalMap, MonotoneDir,
};
pub use error::{Error, Result};
pub use potentials::{birkhoff_sum, builtin_potential, oscillation, Potential};
pub use transfer::{
    build_matrix, conformality_residual, jacobian_at, power_eigendata, pressure, DiscreteMeasure,
    EigenData, Grid, TransferMatrix,
};
