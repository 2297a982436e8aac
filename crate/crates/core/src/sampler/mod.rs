//! Markov chain machinery: proposals, Metropolis-Hastings kernels for
//! deterministic and expected-value criteria, and staged cooling schedules.

mod kernel;
mod proposal;
mod run;
mod schedule;

pub use kernel::{mh_step_deterministic, mh_step_mueller, Cached, ChainState, StepOutcome};
pub use proposal::Proposal;
pub use run::{
    run_replicas, run_schedule, run_schedule_with, Objective, RunOptions, RunOutcome, TraceRecord,
};
pub use schedule::{default_schedule, Schedule, Stage};
