use serde::Serialize;

use crate::domain::{BoundedDomain, Criterion};
use crate::error::{Error, Result};
use crate::guarantees::sigma_for;
use crate::rng::stream_rng;
use crate::target::TargetSpec;

use super::optimizer::{ExceedanceOracle, VerdictKind};
use super::rejection::rejection_sample_parallel;

/// Outcome of comparing the empirical optimizer fraction under exact `pi_J`
/// draws with the lower bound `sigma`.
#[derive(Debug, Clone, Serialize)]
pub struct SigmaCheckReport {
    pub epsilon: f64,
    pub alpha: f64,
    #[serde(rename = "J")]
    pub j: f64,
    pub delta: f64,
    pub sigma: f64,
    pub samples: usize,
    pub yes: usize,
    pub no: usize,
    pub borderline: usize,
    /// Fraction of samples classified `yes`; borderline counts against.
    pub fraction: f64,
    /// Binomial standard error at `sigma`.
    pub std_error: f64,
    /// `sigma - 3 * std_error`.
    pub threshold: f64,
    /// `fraction - threshold`; negative means the check failed.
    pub margin: f64,
    pub proposals: u64,
    pub pass: bool,
}

/// Draws `n_samples` exact samples from `pi_J`, classifies each against one
/// shared reference sample of `n_mc` uniform points, and checks that the
/// `yes` fraction is at least `sigma - 3 se`.
///
/// Streams: the reference sample uses stream 0 of `seed`; rejection chunks
/// use streams 1 onwards.
#[allow(clippy::too_many_arguments)]
pub fn empirical_sigma_check<C: Criterion + ?Sized>(
    domain: &BoundedDomain,
    criterion: &C,
    epsilon: f64,
    alpha: f64,
    target: &TargetSpec,
    n_samples: usize,
    n_mc: usize,
    max_proposals: u64,
    seed: u64,
) -> Result<SigmaCheckReport> {
    let sigma = sigma_for(epsilon, alpha, target)?;
    let oracle = ExceedanceOracle::new(domain, criterion, n_mc, &mut stream_rng(seed, 0))?;
    let draws =
        rejection_sample_parallel(domain, criterion, target, n_samples, max_proposals, seed, 1)?;
    if !draws.complete {
        return Err(Error::SamplingBudgetExceeded {
            accepted: draws.points.len(),
            requested: n_samples,
            proposals: draws.proposals,
        });
    }
    let (mut yes, mut no, mut borderline) = (0, 0, 0);
    for &u in &draws.values {
        match oracle.classify(u, epsilon, alpha).kind {
            VerdictKind::Yes => yes += 1,
            VerdictKind::No => no += 1,
            VerdictKind::Borderline => borderline += 1,
        }
    }
    let fraction = yes as f64 / n_samples as f64;
    let std_error = (sigma * (1.0 - sigma) / n_samples as f64).sqrt();
    let threshold = sigma - 3.0 * std_error;
    Ok(SigmaCheckReport {
        epsilon,
        alpha,
        j: target.j(),
        delta: target.delta(),
        sigma,
        samples: n_samples,
        yes,
        no,
        borderline,
        fraction,
        std_error,
        threshold,
        margin: fraction - threshold,
        proposals: draws.proposals,
        pass: fraction >= threshold,
    })
}
