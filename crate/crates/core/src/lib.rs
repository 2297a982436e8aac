//! Simulated annealing on bounded boxes with finite-time certificates.
//!
//! The chain targets `pi_J ∝ (U + delta)^J` for a finite `J`. Two facts then
//! give a checkable statement after `k` steps:
//!
//! * a draw from `pi_J` is an `(epsilon, alpha)` approximate global optimizer
//!   with probability at least `sigma(epsilon, alpha, J, delta)`
//!   ([`guarantees`]);
//! * a kernel with a uniform-independence component is within
//!   `(1 - beta)^k` of `pi_J` in total variation ([`convergence`]).
//!
//! [`convergence::certify`] combines the two into a [`Certificate`] and
//! [`sampler`] runs the chain. [`verify`] holds brute-force oracles used to
//! check the whole pipeline.

pub mod convergence;
pub mod domain;
pub mod error;
pub mod guarantees;
pub mod registry;
pub mod rng;
pub mod sampler;
pub mod target;
pub mod verify;

pub use convergence::{certify, DeltaMode, MinorizationBound, DEFAULT_STEP_BUDGET};
pub use domain::{BoundedDomain, Criterion, ExpectedValueCriterion, Point};
pub use error::{Error, Result};
pub use guarantees::{Certificate, GuaranteeSpec, ProofParams};
pub use sampler::{Proposal, Schedule};
pub use target::TargetSpec;
