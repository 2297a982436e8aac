use rand::RngCore;
use rayon::prelude::*;
use serde::Serialize;

use crate::domain::{BoundedDomain, Criterion, ExpectedValueCriterion, Point};
use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::target::TargetSpec;

use super::{mh_step_deterministic, mh_step_mueller, ChainState, Proposal, Schedule};

/// The quantity being maximized.
#[derive(Clone, Copy)]
pub enum Objective<'a> {
    Deterministic(&'a dyn Criterion),
    ExpectedValue(&'a dyn ExpectedValueCriterion),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    /// Record every `trace_every`-th step (0 disables the trace).
    pub trace_every: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { trace_every: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub step: u64,
    #[serde(rename = "J")]
    pub j: f64,
    pub theta: Vec<f64>,
    /// `U(theta)`, or the mean stored draw for expected-value criteria.
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub final_state: ChainState,
    pub trace: Vec<TraceRecord>,
    pub best_theta: Point,
    pub best_value: f64,
}

/// Runs every stage of `schedule` and returns the final state and a
/// decimated trace. See [`run_schedule_with`].
#[allow(clippy::too_many_arguments)]
pub fn run_schedule<R: RngCore>(
    domain: &BoundedDomain,
    initial: Point,
    schedule: &Schedule,
    target_final: &TargetSpec,
    proposal: &Proposal,
    objective: Objective<'_>,
    options: RunOptions,
    rng: &mut R,
) -> Result<RunOutcome> {
    let mut trace = Vec::new();
    let mut outcome = run_schedule_with(
        domain,
        initial,
        schedule,
        target_final,
        proposal,
        objective,
        options,
        rng,
        &mut |rec| {
            trace.push(rec.clone());
            Ok(())
        },
    )?;
    outcome.trace = trace;
    Ok(outcome)
}

/// Runs the staged chain, handing each trace record to `observer` as it is
/// produced. The returned outcome has an empty `trace`.
///
/// Every stage uses `target_final.delta()`. For expected-value criteria the
/// stored draws are replaced by `J_stage` fresh draws at the start of each
/// stage. Zero-length stages are skipped.
#[allow(clippy::too_many_arguments)]
pub fn run_schedule_with<R: RngCore>(
    domain: &BoundedDomain,
    initial: Point,
    schedule: &Schedule,
    target_final: &TargetSpec,
    proposal: &Proposal,
    objective: Objective<'_>,
    options: RunOptions,
    rng: &mut R,
    observer: &mut dyn FnMut(&TraceRecord) -> std::io::Result<()>,
) -> Result<RunOutcome> {
    if schedule.final_stage().j != target_final.j() {
        return Err(Error::InvalidParameter(format!(
            "schedule ends at J = {}, target has J = {}",
            schedule.final_stage().j,
            target_final.j()
        )));
    }
    if !domain.contains(initial.coords()) {
        return Err(Error::PointOutsideDomain {
            coords: initial.into_coords(),
        });
    }
    let delta = target_final.delta();
    let stages: Vec<_> = schedule
        .stages()
        .iter()
        .filter(|s| s.steps > 0)
        .copied()
        .collect();
    let first_j = stages.first().map_or(target_final.j(), |s| s.j);

    let integer_j = |j: f64| {
        TargetSpec::new(j, delta)?.integer_j().ok_or_else(|| {
            Error::InvalidParameter(format!("expected-value kernel needs integer J, got {j}"))
        })
    };
    let mut state = match objective {
        Objective::Deterministic(c) => ChainState::deterministic(initial, c)?,
        Objective::ExpectedValue(e) => {
            ChainState::mueller(initial, integer_j(first_j)?, delta, e, rng)?
        }
    };

    let emit = |observer: &mut dyn FnMut(&TraceRecord) -> std::io::Result<()>,
                state: &ChainState,
                j: f64| {
        observer(&TraceRecord {
            step: state.step_index,
            j,
            theta: state.theta.coords().to_vec(),
            value: state.value(),
        })
        .map_err(|e| Error::Io(e.to_string()))
    };
    if options.trace_every > 0 {
        emit(observer, &state, first_j)?;
    }
    let mut best_theta = state.theta.clone();
    let mut best_value = state.value();

    for (i, stage) in stages.iter().enumerate() {
        let target = TargetSpec::new(stage.j, delta)?;
        if let Objective::ExpectedValue(e) = objective {
            if i > 0 {
                state.redraw(integer_j(stage.j)?, delta, e, rng)?;
            }
        }
        for _ in 0..stage.steps {
            match objective {
                Objective::Deterministic(c) => {
                    mh_step_deterministic(&mut state, domain, &target, proposal, c, rng)?
                }
                Objective::ExpectedValue(e) => {
                    mh_step_mueller(&mut state, domain, &target, proposal, e, rng)?
                }
            };
            if state.value() > best_value {
                best_value = state.value();
                best_theta = state.theta.clone();
            }
            if options.trace_every > 0 && state.step_index % options.trace_every == 0 {
                emit(observer, &state, stage.j)?;
            }
        }
    }
    // always close the trace with the final state
    if options.trace_every > 0 && state.step_index % options.trace_every != 0 {
        emit(observer, &state, target_final.j())?;
    }

    Ok(RunOutcome {
        final_state: state,
        trace: Vec::new(),
        best_theta,
        best_value,
    })
}

/// Runs `replicas` independent chains in parallel. Replica `r` uses random
/// stream `r` under `seed`, so results do not depend on the thread count.
#[allow(clippy::too_many_arguments)]
pub fn run_replicas(
    domain: &BoundedDomain,
    initial: &Point,
    schedule: &Schedule,
    target_final: &TargetSpec,
    proposal: &Proposal,
    objective: Objective<'_>,
    options: RunOptions,
    seed: u64,
    replicas: u64,
) -> Result<Vec<RunOutcome>> {
    (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, r);
            run_schedule(
                domain,
                initial.clone(),
                schedule,
                target_final,
                proposal,
                objective,
                options,
                &mut rng,
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::ZeroVariance;
    use crate::registry;
    use crate::sampler::{default_schedule, Stage};

    fn bumps() -> (BoundedDomain, impl Criterion) {
        (BoundedDomain::cube(1, 0.0, 1.0).unwrap(), registry::bumps1d)
    }

    #[test]
    fn single_stage_equals_raw_kernel_steps() {
        let (d, u) = bumps();
        let t = TargetSpec::new(6.0, 0.5).unwrap();
        let p = Proposal::mixture(0.3, 0.05).unwrap();
        let mut rng = stream_rng(1, 0);
        let out = run_schedule(
            &d,
            d.center(),
            &Schedule::single(6.0, 500).unwrap(),
            &t,
            &p,
            Objective::Deterministic(&u),
            RunOptions::default(),
            &mut rng,
        )
        .unwrap();
        let mut rng = stream_rng(1, 0);
        let mut s = ChainState::deterministic(d.center(), &u).unwrap();
        for rec in out.trace.iter().skip(1) {
            mh_step_deterministic(&mut s, &d, &t, &p, &u, &mut rng).unwrap();
            assert_eq!(rec.theta, s.theta.coords());
        }
        assert_eq!(out.trace.len(), 501);
        assert_eq!(out.final_state, s);
    }

    #[test]
    fn zero_length_stage_is_a_no_op() {
        let (d, u) = bumps();
        let t = TargetSpec::new(6.0, 0.5).unwrap();
        let run = |schedule: Schedule| {
            let mut rng = stream_rng(2, 0);
            run_schedule(
                &d,
                d.center(),
                &schedule,
                &t,
                &Proposal::Uniform,
                Objective::Deterministic(&u),
                RunOptions::default(),
                &mut rng,
            )
            .unwrap()
        };
        let a = run(Schedule::new(vec![
            Stage { j: 1.0, steps: 0 },
            Stage { j: 6.0, steps: 300 },
        ])
        .unwrap());
        let b = run(Schedule::single(6.0, 300).unwrap());
        assert_eq!(a.trace, b.trace);
    }

    #[test]
    fn schedule_must_end_at_target_j() {
        let (d, u) = bumps();
        let t = TargetSpec::new(6.0, 0.5).unwrap();
        let mut rng = stream_rng(3, 0);
        let r = run_schedule(
            &d,
            d.center(),
            &Schedule::single(4.0, 10).unwrap(),
            &t,
            &Proposal::Uniform,
            Objective::Deterministic(&u),
            RunOptions::default(),
            &mut rng,
        );
        assert!(r.is_err());
    }

    #[test]
    fn trace_decimation() {
        let (d, u) = bumps();
        let t = TargetSpec::new(2.0, 0.5).unwrap();
        let mut rng = stream_rng(4, 0);
        let out = run_schedule(
            &d,
            d.center(),
            &Schedule::single(2.0, 105).unwrap(),
            &t,
            &Proposal::Uniform,
            Objective::Deterministic(&u),
            RunOptions { trace_every: 10 },
            &mut rng,
        )
        .unwrap();
        let steps: Vec<_> = out.trace.iter().map(|r| r.step).collect();
        assert_eq!(steps.first(), Some(&0));
        assert_eq!(steps.last(), Some(&105));
        assert_eq!(steps.len(), 12);
    }

    #[test]
    fn chain_never_leaves_domain_and_is_deterministic() {
        let d = BoundedDomain::cube(2, -5.12, 5.12).unwrap();
        let f = registry::lookup("rastrigin-scaled-2d", None).unwrap();
        let t = TargetSpec::new(8.0, 0.5).unwrap();
        let p = Proposal::mixture(0.8, 0.2).unwrap();
        let sched = default_schedule(8.0, 2000).unwrap();
        let run = || {
            let mut rng = stream_rng(5, 3);
            run_schedule(
                &d,
                d.center(),
                &sched,
                &t,
                &p,
                Objective::Deterministic(&*f.criterion),
                RunOptions::default(),
                &mut rng,
            )
            .unwrap()
        };
        let a = run();
        assert!(a.trace.iter().all(|r| d.contains(&r.theta)));
        assert!(a.final_state.out_of_domain > 0);
        let b = run();
        assert_eq!(a.trace, b.trace);
    }

    #[test]
    fn mueller_run_with_zero_variance_tracks_deterministic_run() {
        let (d, u) = bumps();
        let g = ZeroVariance(registry::bumps1d);
        let t = TargetSpec::new(8.0, 0.5).unwrap();
        let sched = default_schedule(8.0, 1000).unwrap();
        let p = Proposal::mixture(0.5, 0.05).unwrap();
        let mut ra = stream_rng(6, 0);
        let mut rb = stream_rng(6, 0);
        let a = run_schedule(
            &d,
            d.center(),
            &sched,
            &t,
            &p,
            Objective::Deterministic(&u),
            RunOptions::default(),
            &mut ra,
        )
        .unwrap();
        let b = run_schedule(
            &d,
            d.center(),
            &sched,
            &t,
            &p,
            Objective::ExpectedValue(&g),
            RunOptions::default(),
            &mut rb,
        )
        .unwrap();
        assert_eq!(a.trace.len(), b.trace.len());
        for (x, y) in a.trace.iter().zip(&b.trace) {
            assert_eq!(x.theta, y.theta);
            assert!((x.value - y.value).abs() < 1e-12);
        }
    }

    #[test]
    fn mueller_run_requires_integer_j() {
        let (d, _) = bumps();
        let g = ZeroVariance(registry::bumps1d);
        let t = TargetSpec::new(2.5, 0.5).unwrap();
        let mut rng = stream_rng(7, 0);
        let r = run_schedule(
            &d,
            d.center(),
            &Schedule::single(2.5, 10).unwrap(),
            &t,
            &Proposal::Uniform,
            Objective::ExpectedValue(&g),
            RunOptions::default(),
            &mut rng,
        );
        assert!(r.is_err());
    }

    #[test]
    fn default_schedule_finds_bumps_peak() {
        // oracle: bumps1d max is 1 at 0.72, checked by dense grid in the registry tests
        let (d, u) = bumps();
        let t = TargetSpec::new(6.0, 0.5).unwrap();
        let sched = default_schedule(6.0, 70_000).unwrap();
        assert!(sched.total_steps() <= 100_000);
        let p = Proposal::mixture(0.5, 0.02).unwrap();
        let runs = run_replicas(
            &d,
            &d.center(),
            &sched,
            &t,
            &p,
            Objective::Deterministic(&u),
            RunOptions { trace_every: 0 },
            99,
            40,
        )
        .unwrap();
        let hits = runs.iter().filter(|r| r.best_value >= 0.95).count();
        assert!(hits as f64 >= 0.95 * runs.len() as f64, "{hits}/40");
    }
}
