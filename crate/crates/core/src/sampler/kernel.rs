use rand::{Rng, RngCore};
use serde::Serialize;

use crate::domain::{
    checked_draw, checked_value, BoundedDomain, Criterion, ExpectedValueCriterion, Point,
};
use crate::error::{Error, Result};
use crate::target::{acceptance_log_ratio, TargetSpec};

use super::Proposal;

/// Criterion data cached for the current point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Cached {
    /// `U(theta)` for a deterministic criterion.
    Value { u: f64 },
    /// Stored draws for the expected-value kernel: `sum_i ln(g_i + delta)`
    /// over `j` draws at `theta`, and their arithmetic mean.
    LogProduct {
        j: u64,
        log_product: f64,
        mean_draw: f64,
    },
}

impl Cached {
    /// `U(theta)`, or the mean of the stored draws.
    pub fn value(&self) -> f64 {
        match *self {
            Cached::Value { u } => u,
            Cached::LogProduct { mean_draw, .. } => mean_draw,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub theta: Point,
    pub cached: Cached,
    pub step_index: u64,
    pub accepted: u64,
    pub out_of_domain: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Accepted,
    Rejected,
    /// The proposal left the box; counted as a rejection.
    OutOfDomain,
}

impl ChainState {
    fn new(theta: Point, cached: Cached) -> Self {
        Self {
            theta,
            cached,
            step_index: 0,
            accepted: 0,
            out_of_domain: 0,
        }
    }

    /// Start for the deterministic kernel; evaluates `U` once.
    pub fn deterministic<C: Criterion + ?Sized>(theta: Point, criterion: &C) -> Result<Self> {
        let u = checked_value(criterion, theta.coords())?;
        Ok(Self::new(theta, Cached::Value { u }))
    }

    /// Start for the expected-value kernel; draws `j` values of `g` at `theta`.
    pub fn mueller<E: ExpectedValueCriterion + ?Sized, R: RngCore>(
        theta: Point,
        j: u64,
        delta: f64,
        criterion: &E,
        rng: &mut R,
    ) -> Result<Self> {
        let cached = draw_log_product(criterion, theta.coords(), j, delta, rng)?;
        Ok(Self::new(theta, cached))
    }

    /// Replaces the stored draws with `j` fresh ones at the current point.
    pub fn redraw<E: ExpectedValueCriterion + ?Sized, R: RngCore>(
        &mut self,
        j: u64,
        delta: f64,
        criterion: &E,
        rng: &mut R,
    ) -> Result<()> {
        self.cached = draw_log_product(criterion, self.theta.coords(), j, delta, rng)?;
        Ok(())
    }

    pub fn value(&self) -> f64 {
        self.cached.value()
    }
}

fn draw_log_product<E: ExpectedValueCriterion + ?Sized, R: RngCore>(
    criterion: &E,
    theta: &[f64],
    j: u64,
    delta: f64,
    rng: &mut R,
) -> Result<Cached> {
    if j == 0 {
        return Err(Error::InvalidParameter(
            "expected-value kernel needs J >= 1".into(),
        ));
    }
    let mut log_product = 0.0;
    // running mean, so identical draws give back exactly that draw
    let mut mean_draw = 0.0;
    for i in 0..j {
        let g = checked_draw(criterion, theta, rng)?;
        log_product += (g + delta).ln();
        mean_draw += (g - mean_draw) / (i + 1) as f64;
    }
    Ok(Cached::LogProduct {
        j,
        log_product,
        mean_draw,
    })
}

fn accept<R: RngCore>(log_ratio: f64, rng: &mut R) -> bool {
    log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio
}

/// One Metropolis-Hastings step targeting `pi_J ∝ (U + delta)^J`.
///
/// Exactly one criterion evaluation per in-box proposal. An acceptance
/// uniform is drawn only when the log ratio is negative.
pub fn mh_step_deterministic<C: Criterion + ?Sized, R: RngCore>(
    state: &mut ChainState,
    domain: &BoundedDomain,
    target: &TargetSpec,
    proposal: &Proposal,
    criterion: &C,
    rng: &mut R,
) -> Result<StepOutcome> {
    let Cached::Value { u: u_current } = state.cached else {
        return Err(Error::InvalidParameter(
            "chain state carries expected-value draws".into(),
        ));
    };
    state.step_index += 1;
    let candidate = proposal.propose(domain, state.theta.coords(), rng);
    if !domain.contains(&candidate) {
        state.out_of_domain += 1;
        return Ok(StepOutcome::OutOfDomain);
    }
    let u_proposed = checked_value(criterion, &candidate)?;
    let (log_q_forward, log_q_backward) = proposal.log_q_pair(state.theta.coords(), &candidate);
    let ratio = acceptance_log_ratio(target, u_current, u_proposed, log_q_forward, log_q_backward);
    if accept(ratio, rng) {
        state.theta = Point::from_trusted(candidate);
        state.cached = Cached::Value { u: u_proposed };
        state.accepted += 1;
        Ok(StepOutcome::Accepted)
    } else {
        Ok(StepOutcome::Rejected)
    }
}

/// One step of the expected-value kernel with stored draws.
///
/// Draws `J` values `g(x_i, candidate)` and accepts with probability
/// `min(1, prod (g_i + delta) / stored product)`. The stored product of the
/// current point is never refreshed on rejection. This is Metropolis-Hastings
/// on `(theta, x_1..x_J)` whose `theta` marginal is `pi_J`.
pub fn mh_step_mueller<E: ExpectedValueCriterion + ?Sized, R: RngCore>(
    state: &mut ChainState,
    domain: &BoundedDomain,
    target: &TargetSpec,
    proposal: &Proposal,
    criterion: &E,
    rng: &mut R,
) -> Result<StepOutcome> {
    let j = target.integer_j().ok_or_else(|| {
        Error::InvalidParameter(format!(
            "expected-value kernel needs integer J, got {}",
            target.j()
        ))
    })?;
    let Cached::LogProduct {
        j: stored_j,
        log_product,
        ..
    } = state.cached
    else {
        return Err(Error::InvalidParameter(
            "chain state carries a deterministic value".into(),
        ));
    };
    if stored_j != j {
        return Err(Error::InvalidParameter(format!(
            "stored draws were made for J = {stored_j}, kernel runs at J = {j}"
        )));
    }
    state.step_index += 1;
    let candidate = proposal.propose(domain, state.theta.coords(), rng);
    if !domain.contains(&candidate) {
        state.out_of_domain += 1;
        return Ok(StepOutcome::OutOfDomain);
    }
    let drawn = draw_log_product(criterion, &candidate, j, target.delta(), rng)?;
    let Cached::LogProduct {
        log_product: proposed,
        ..
    } = drawn
    else {
        unreachable!("draw_log_product returns stored draws");
    };
    let (log_q_forward, log_q_backward) = proposal.log_q_pair(state.theta.coords(), &candidate);
    let ratio = proposed - log_product + log_q_backward - log_q_forward;
    if accept(ratio, rng) {
        state.theta = Point::from_trusted(candidate);
        state.cached = drawn;
        state.accepted += 1;
        Ok(StepOutcome::Accepted)
    } else {
        Ok(StepOutcome::Rejected)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::ZeroVariance;
    use crate::rng::stream_rng;

    fn unit() -> BoundedDomain {
        BoundedDomain::cube(1, 0.0, 1.0).unwrap()
    }

    #[test]
    fn out_of_box_proposal_only_advances_step() {
        let d = unit();
        let u = |t: &[f64]| t[0];
        let mut s = ChainState::deterministic(d.point(vec![0.999]).unwrap(), &u).unwrap();
        let t = TargetSpec::new(2.0, 0.5).unwrap();
        let p = Proposal::walk(100.0).unwrap();
        let mut rng = stream_rng(5, 0);
        let mut outside = 0;
        for _ in 0..50 {
            let before = s.clone();
            if mh_step_deterministic(&mut s, &d, &t, &p, &u, &mut rng).unwrap()
                == StepOutcome::OutOfDomain
            {
                outside += 1;
                assert_eq!(s.theta, before.theta);
                assert_eq!(s.cached, before.cached);
                assert_eq!(s.step_index, before.step_index + 1);
            }
        }
        assert!(outside > 40);
    }

    #[test]
    fn equal_values_always_accepted() {
        let d = unit();
        let flat = |_: &[f64]| 0.4;
        let mut s = ChainState::deterministic(d.center(), &flat).unwrap();
        let t = TargetSpec::new(50.0, 0.1).unwrap();
        let mut rng = stream_rng(6, 0);
        for _ in 0..200 {
            let out =
                mh_step_deterministic(&mut s, &d, &t, &Proposal::Uniform, &flat, &mut rng).unwrap();
            assert_eq!(out, StepOutcome::Accepted);
        }
    }

    #[test]
    fn mueller_out_of_box_consumes_no_draws() {
        struct Counting(std::sync::atomic::AtomicUsize);
        impl ExpectedValueCriterion for Counting {
            fn sample_g(&self, _: &[f64], _: &mut dyn RngCore) -> f64 {
                self.0.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                0.5
            }
        }
        let d = unit();
        let g = Counting(0.into());
        let mut rng = stream_rng(7, 0);
        let mut s = ChainState::mueller(d.point(vec![1.0]).unwrap(), 3, 0.5, &g, &mut rng).unwrap();
        let t = TargetSpec::new(3.0, 0.5).unwrap();
        let p = Proposal::walk(1000.0).unwrap();
        let mut outside = 0;
        for _ in 0..20 {
            let before = g.0.load(std::sync::atomic::Ordering::Relaxed);
            let out = mh_step_mueller(&mut s, &d, &t, &p, &g, &mut rng).unwrap();
            let after = g.0.load(std::sync::atomic::Ordering::Relaxed);
            if out == StepOutcome::OutOfDomain {
                outside += 1;
                assert_eq!(before, after);
            } else {
                assert_eq!(after, before + 3);
            }
        }
        assert!(outside > 15);
    }

    #[test]
    fn mueller_rejects_mismatched_j() {
        let d = unit();
        let g = ZeroVariance(|t: &[f64]| t[0]);
        let mut rng = stream_rng(8, 0);
        let mut s = ChainState::mueller(d.center(), 2, 0.5, &g, &mut rng).unwrap();
        let t = TargetSpec::new(3.0, 0.5).unwrap();
        assert!(mh_step_mueller(&mut s, &d, &t, &Proposal::Uniform, &g, &mut rng).is_err());
        let t = TargetSpec::new(2.5, 0.5).unwrap();
        assert!(mh_step_mueller(&mut s, &d, &t, &Proposal::Uniform, &g, &mut rng).is_err());
    }

    #[test]
    fn criterion_range_violation_is_fatal() {
        let d = unit();
        let bad = |t: &[f64]| if t[0] > 0.5 { 2.0 } else { 0.1 };
        let mut s = ChainState::deterministic(d.point(vec![0.1]).unwrap(), &bad).unwrap();
        let t = TargetSpec::new(1.0, 0.5).unwrap();
        let mut rng = stream_rng(9, 0);
        let mut failed = false;
        for _ in 0..100 {
            if let Err(e) =
                mh_step_deterministic(&mut s, &d, &t, &Proposal::Uniform, &bad, &mut rng)
            {
                assert!(matches!(e, Error::CriterionOutOfRange { .. }));
                failed = true;
                break;
            }
        }
        assert!(failed);
    }

    #[test]
    fn zero_variance_mueller_matches_deterministic_steps() {
        let d = unit();
        let u = |t: &[f64]| crate::registry::bumps1d(t);
        let g = ZeroVariance(u);
        let t = TargetSpec::new(4.0, 0.5).unwrap();
        let p = Proposal::mixture(0.5, 0.05).unwrap();
        let mut ra = stream_rng(10, 0);
        let mut rb = stream_rng(10, 0);
        let mut a = ChainState::deterministic(d.center(), &u).unwrap();
        let mut b = ChainState::mueller(d.center(), 4, 0.5, &g, &mut rb).unwrap();
        for _ in 0..5000 {
            let oa = mh_step_deterministic(&mut a, &d, &t, &p, &u, &mut ra).unwrap();
            let ob = mh_step_mueller(&mut b, &d, &t, &p, &g, &mut rb).unwrap();
            assert_eq!(oa, ob);
            assert_eq!(a.theta, b.theta);
        }
    }
}
