//! Brute-force oracles for checking the theory end to end at desk scale.
//!
//! Everything here is independent of the sampler: exact draws from `pi_J` by
//! rejection, Monte Carlo estimates of the exceedance measure that defines an
//! approximate optimizer, and exact transition matrices of the kernel on a
//! discretized 1-D domain. Grid results treat each cell's value as `U` at the
//! cell center; they are used for checks only, never for certificates.

mod discrete;
mod optimizer;
mod rejection;
mod sigma_check;
mod stats;
pub mod suites;

pub use discrete::{
    doeblin_constant, exact_tv_discretized, mueller_two_cell_stationary, stationary_solved,
    GridChain, GridProposal, MAX_GRID_CELLS,
};
pub use optimizer::{is_approx_optimizer, ExceedanceOracle, Verdict, VerdictKind, MIN_MC_POINTS};
pub use rejection::{
    rejection_sample_parallel, rejection_sample_target, RejectionSamples, COST_WARNING_PROPOSALS,
};
pub use sigma_check::{empirical_sigma_check, SigmaCheckReport};
pub use stats::{histogram, histogram_tv, tv_distance};
pub use suites::{
    near_tight_step, run_suite, CheckResult, Suite, SuiteOptions, VerificationReport,
};
