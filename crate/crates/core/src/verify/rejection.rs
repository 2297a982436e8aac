use rand::{Rng, RngCore};
use rayon::prelude::*;

use crate::domain::{checked_value, BoundedDomain, Criterion, Point};
use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::target::TargetSpec;

/// Worst-case proposal counts above this trigger a cost warning.
pub const COST_WARNING_PROPOSALS: f64 = 1e8;

#[derive(Debug, Clone)]
pub struct RejectionSamples {
    pub points: Vec<Point>,
    pub values: Vec<f64>,
    pub proposals: u64,
    /// False when the proposal budget ran out first.
    pub complete: bool,
    /// Set when the worst-case cost `n ((1+delta)/delta)^J` exceeds
    /// [`COST_WARNING_PROPOSALS`].
    pub cost_warning: Option<String>,
}

fn cost_warning(target: &TargetSpec, n: usize) -> Option<String> {
    let worst = n as f64 * (target.j() * (1.0 / target.delta()).ln_1p()).exp();
    (worst > COST_WARNING_PROPOSALS).then(|| {
        format!("worst-case cost {worst:.3e} proposals exceeds {COST_WARNING_PROPOSALS:e}")
    })
}

/// Exact draws from `pi_J`: propose uniformly, accept with probability
/// `((U + delta) / (1 + delta))^J`, which is at most 1 because `U <= 1`.
pub fn rejection_sample_target<C: Criterion + ?Sized, R: RngCore>(
    domain: &BoundedDomain,
    criterion: &C,
    target: &TargetSpec,
    n: usize,
    max_proposals: u64,
    rng: &mut R,
) -> Result<RejectionSamples> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "sample count must be at least 1".into(),
        ));
    }
    let log_norm = (1.0 + target.delta()).ln();
    let mut points = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    let mut proposals = 0u64;
    while points.len() < n && proposals < max_proposals {
        proposals += 1;
        let theta = domain.sample_uniform(rng);
        let u = checked_value(criterion, theta.coords())?;
        let log_accept = target.j() * ((u + target.delta()).ln() - log_norm);
        if rng.random::<f64>().ln() < log_accept {
            points.push(theta);
            values.push(u);
        }
    }
    Ok(RejectionSamples {
        complete: points.len() == n,
        points,
        values,
        proposals,
        cost_warning: cost_warning(target, n),
    })
}

const CHUNK: usize = 1024;

/// Parallel [`rejection_sample_target`]. Chunk `c` of at most 1024 samples
/// uses stream `stream_offset + c` under `seed`, so the output is
/// independent of the thread count.
pub fn rejection_sample_parallel<C: Criterion + ?Sized>(
    domain: &BoundedDomain,
    criterion: &C,
    target: &TargetSpec,
    n: usize,
    max_proposals: u64,
    seed: u64,
    stream_offset: u64,
) -> Result<RejectionSamples> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "sample count must be at least 1".into(),
        ));
    }
    let chunks = n.div_ceil(CHUNK);
    let per_chunk_budget = max_proposals.div_ceil(chunks as u64);
    let parts: Vec<RejectionSamples> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let size = CHUNK.min(n - c * CHUNK);
            let mut rng = stream_rng(seed, stream_offset + c as u64);
            rejection_sample_target(domain, criterion, target, size, per_chunk_budget, &mut rng)
        })
        .collect::<Result<_>>()?;
    let mut out = RejectionSamples {
        points: Vec::with_capacity(n),
        values: Vec::with_capacity(n),
        proposals: 0,
        complete: true,
        cost_warning: cost_warning(target, n),
    };
    for part in parts {
        out.points.extend(part.points);
        out.values.extend(part.values);
        out.proposals += part.proposals;
        out.complete &= part.complete;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry;
    use crate::verify::stats::{histogram, tv_distance};

    #[test]
    fn flat_target_gives_uniform_output() {
        let d = BoundedDomain::cube(1, 0.0, 1.0).unwrap();
        let flat = |_: &[f64]| 0.3;
        let t = TargetSpec::new(1.0, 0.5).unwrap();
        let s = rejection_sample_parallel(&d, &flat, &t, 50_000, u64::MAX, 1, 0).unwrap();
        assert!(s.complete);
        let h = histogram(s.points.iter().map(|p| p.coords()[0]), 0.0, 1.0, 10);
        assert!(tv_distance(&h, &[0.1; 10]) < 0.01);
        // constant acceptance (0.8/1.5) within binomial noise
        let rate = 50_000.0 / s.proposals as f64;
        assert!((rate - 0.8 / 1.5).abs() < 0.01, "{rate}");
    }

    #[test]
    fn bumps_histogram_matches_grid_density() {
        // oracle: (U + delta)^J normalized on a 10^4-point grid, binned to 50 bins
        let d = BoundedDomain::cube(1, 0.0, 1.0).unwrap();
        let t = TargetSpec::new(6.0, 0.5).unwrap();
        let s =
            rejection_sample_parallel(&d, &registry::bumps1d, &t, 100_000, u64::MAX, 2, 0).unwrap();
        let grid = 10_000;
        let mut dens = vec![0.0; 50];
        for i in 0..grid {
            let x = (i as f64 + 0.5) / grid as f64;
            dens[(x * 50.0) as usize] += (registry::bumps1d(&[x]) + 0.5).powi(6);
        }
        let z: f64 = dens.iter().sum();
        dens.iter_mut().for_each(|v| *v /= z);
        let h = histogram(s.points.iter().map(|p| p.coords()[0]), 0.0, 1.0, 50);
        let tv = tv_distance(&h, &dens);
        assert!(tv <= 0.02, "{tv}");
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        let d = BoundedDomain::cube(1, 0.0, 1.0).unwrap();
        let zero = |_: &[f64]| 0.0;
        let t = TargetSpec::new(40.0, 0.01).unwrap();
        let mut rng = stream_rng(3, 0);
        let s = rejection_sample_target(&d, &zero, &t, 10, 1000, &mut rng).unwrap();
        assert!(!s.complete);
        assert_eq!(s.proposals, 1000);
        assert!(s.cost_warning.is_some());
    }
}
