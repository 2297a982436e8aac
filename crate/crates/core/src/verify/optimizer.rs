use rand::RngCore;
use serde::Serialize;

use crate::domain::{checked_value, BoundedDomain, Criterion};
use crate::error::{Error, Result};

/// Smallest Monte Carlo sample accepted by [`ExceedanceOracle`].
pub const MIN_MC_POINTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VerdictKind {
    Yes,
    No,
    /// The 3-standard-error band around the estimate contains `alpha`.
    Borderline,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    /// Estimated normalized volume of `{theta' : U(theta') > U(theta) + epsilon}`.
    pub exceedance: f64,
    pub std_error: f64,
}

/// Sorted criterion values at uniform reference points.
///
/// One sample answers every exceedance query, so classifying many points
/// costs a binary search each rather than a fresh Monte Carlo run.
#[derive(Debug, Clone)]
pub struct ExceedanceOracle {
    sorted: Vec<f64>,
}

impl ExceedanceOracle {
    pub fn new<C: Criterion + ?Sized, R: RngCore>(
        domain: &BoundedDomain,
        criterion: &C,
        n_mc: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if n_mc < MIN_MC_POINTS {
            return Err(Error::InvalidParameter(format!(
                "need at least {MIN_MC_POINTS} Monte Carlo points, got {n_mc}"
            )));
        }
        let mut sorted = (0..n_mc)
            .map(|_| checked_value(criterion, domain.sample_uniform(rng).coords()))
            .collect::<Result<Vec<_>>>()?;
        sorted.sort_by(f64::total_cmp);
        Ok(Self { sorted })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Fraction of reference values strictly above `level`.
    pub fn fraction_above(&self, level: f64) -> f64 {
        let at_or_below = self.sorted.partition_point(|&v| v <= level);
        (self.sorted.len() - at_or_below) as f64 / self.sorted.len() as f64
    }

    /// Classifies a point with criterion value `u`.
    pub fn classify(&self, u: f64, epsilon: f64, alpha: f64) -> Verdict {
        let p = self.fraction_above(u + epsilon);
        let se = (p * (1.0 - p) / self.sorted.len() as f64).sqrt();
        let kind = if p + 3.0 * se <= alpha {
            VerdictKind::Yes
        } else if p - 3.0 * se > alpha {
            VerdictKind::No
        } else {
            VerdictKind::Borderline
        };
        Verdict {
            kind,
            exceedance: p,
            std_error: se,
        }
    }
}

/// Decides whether `theta` is an `(epsilon, alpha)` approximate global
/// optimizer using `n_mc` fresh uniform reference points.
pub fn is_approx_optimizer<C: Criterion + ?Sized, R: RngCore>(
    domain: &BoundedDomain,
    criterion: &C,
    theta: &[f64],
    epsilon: f64,
    alpha: f64,
    n_mc: usize,
    rng: &mut R,
) -> Result<Verdict> {
    if !domain.contains(theta) {
        return Err(Error::PointOutsideDomain {
            coords: theta.to_vec(),
        });
    }
    let u = checked_value(criterion, theta)?;
    let oracle = ExceedanceOracle::new(domain, criterion, n_mc, rng)?;
    Ok(oracle.classify(u, epsilon, alpha))
}
