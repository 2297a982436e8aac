//! Total-variation bounds for the final homogeneous stage.
//!
//! With probability `w` the kernel draws its proposal uniformly from the box.
//! For that independence component the density ratio `pi_J / uniform` is at
//! most `M = ((1 + delta) / delta)^J` whatever `U` is, so every transition
//! satisfies `P(theta, A) >= (w / M) pi_J(A)`. This Doeblin condition gives
//! `||P^k(theta, .) - pi_J||_TV <= (1 - beta)^k` with `beta = w / M`, from
//! any starting point. This is the standard uniform-ergodicity bound for
//! independence samplers; it needs no assumption on `U`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::guarantees::{self, compose_confidence, Certificate, GuaranteeSpec};
use crate::target::TargetSpec;

/// Default cap on certified final-stage steps.
pub const DEFAULT_STEP_BUDGET: u64 = 1_000_000_000;

/// Per-step minorization constant of a kernel whose proposal includes the
/// uniform-independence component with weight `uniform_weight`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinorizationBound {
    pub beta: f64,
    /// `ln(beta)`; stays finite when `beta` underflows.
    pub log_beta: f64,
    pub target: TargetSpec,
    pub uniform_weight: f64,
}

pub fn minorization_constant(
    target: &TargetSpec,
    uniform_weight: f64,
) -> Result<MinorizationBound> {
    if uniform_weight == 0.0 {
        return Err(Error::NoIndependenceComponent);
    }
    if !(uniform_weight > 0.0 && uniform_weight <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "uniform weight must lie in (0, 1], got {uniform_weight}"
        )));
    }
    let log_beta = uniform_weight.ln() - target.j() * (1.0 / target.delta()).ln_1p();
    // powf keeps full relative precision for large J, where exp(log_beta)
    // would lose about J * ulp
    let beta = uniform_weight * ((1.0 + target.delta()) / target.delta()).powf(-target.j());
    Ok(MinorizationBound {
        beta: if beta.is_normal() {
            beta
        } else {
            log_beta.exp()
        },
        log_beta,
        target: *target,
        uniform_weight,
    })
}

/// `min(1, (1 - beta)^k)`.
pub fn tv_bound_after(bound: &MinorizationBound, k: u64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    (k as f64 * (-bound.beta).ln_1p()).exp().min(1.0)
}

/// Real-valued number of steps needed for `(1 - beta)^k <= tv_target`,
/// before rounding. May be `+inf`.
pub fn required_steps(bound: &MinorizationBound, tv_target: f64) -> f64 {
    let log_tv = tv_target.ln();
    if bound.beta.is_normal() {
        (log_tv / (-bound.beta).ln_1p()).ceil().max(0.0)
    } else {
        // beta underflowed: ln(1 - beta) = -beta to double precision
        ((-log_tv).ln() - bound.log_beta).exp().ceil()
    }
}

/// Smallest `k` with `(1 - beta)^k <= tv_target`, or
/// [`Error::InfeasibleSteps`] carrying the required `k` when it exceeds `budget`.
pub fn steps_for_tv(bound: &MinorizationBound, tv_target: f64, budget: u64) -> Result<u64> {
    if !(tv_target > 0.0 && tv_target < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "TV target must lie in (0, 1), got {tv_target}"
        )));
    }
    let estimate = required_steps(bound, tv_target);
    if estimate.is_nan() || estimate > budget as f64 {
        return Err(Error::InfeasibleSteps {
            required_steps: estimate,
            budget,
        });
    }
    let mut k = estimate as u64;
    while tv_bound_after(bound, k) > tv_target {
        k += 1;
    }
    while k > 0 && tv_bound_after(bound, k - 1) <= tv_target {
        k -= 1;
    }
    if k > budget {
        return Err(Error::InfeasibleSteps {
            required_steps: k as f64,
            budget,
        });
    }
    Ok(k)
}

/// How delta is chosen when certifying.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeltaMode {
    /// Use the given delta and the smallest sufficient J.
    Fixed(f64),
    /// Choose delta to minimize J.
    Optimize,
    /// Choose delta to minimize the certified number of steps.
    MinSteps,
}

/// What `certify` reports when the required `k` exceeds the budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Infeasibility {
    pub epsilon: f64,
    pub alpha: f64,
    pub sigma_target: f64,
    #[serde(rename = "J")]
    pub j: f64,
    pub delta: f64,
    pub sigma: f64,
    pub beta: f64,
    pub tv_target: f64,
    pub required_k: f64,
    pub budget: u64,
}

/// Picks the target for `mode`.
pub fn select_target(
    spec: &GuaranteeSpec,
    tv_target: f64,
    uniform_weight: f64,
    mode: DeltaMode,
) -> Result<TargetSpec> {
    match mode {
        DeltaMode::Fixed(delta) => TargetSpec::new(guarantees::min_j(spec, delta)?, delta),
        DeltaMode::Optimize => guarantees::min_delta_j(spec),
        DeltaMode::MinSteps => {
            if spec.is_degenerate() {
                return TargetSpec::new(1.0, guarantees::DELTA_SEARCH_MAX);
            }
            let log_steps = |x: f64| -> f64 {
                let delta = x.exp();
                let Ok(j) = guarantees::min_j(spec, delta) else {
                    return f64::INFINITY;
                };
                let Ok(target) = TargetSpec::new(j, delta) else {
                    return f64::INFINITY;
                };
                match minorization_constant(&target, uniform_weight) {
                    Ok(bound) => required_steps(&bound, tv_target).max(1.0).ln(),
                    Err(_) => f64::INFINITY,
                }
            };
            let (delta, value) = guarantees::minimize_over_log_delta(&log_steps);
            if !value.is_finite() && guarantees::min_j(spec, delta).is_err() {
                return Err(Error::Unreachable {
                    epsilon: spec.epsilon(),
                    alpha: spec.alpha(),
                    delta,
                    sigma_target: spec.sigma_target(),
                });
            }
            TargetSpec::new(guarantees::min_j(spec, delta)?, delta)
        }
    }
}

/// Certificate for a given target: `k` final-stage steps from any start.
pub fn certify_target(
    spec: &GuaranteeSpec,
    target: &TargetSpec,
    tv_target: f64,
    uniform_weight: f64,
    budget: u64,
) -> Result<Certificate> {
    if !(tv_target > 0.0 && tv_target < spec.sigma_target()) {
        return Err(Error::InvalidParameter(format!(
            "TV target must lie in (0, sigma target = {}), got {tv_target}",
            spec.sigma_target()
        )));
    }
    let sigma = guarantees::sigma(spec, target);
    let bound = minorization_constant(target, uniform_weight)?;
    let k = match steps_for_tv(&bound, tv_target, budget) {
        Ok(k) => k,
        Err(Error::InfeasibleSteps {
            required_steps,
            budget,
        }) => {
            return Err(Error::Infeasible(Box::new(Infeasibility {
                epsilon: spec.epsilon(),
                alpha: spec.alpha(),
                sigma_target: spec.sigma_target(),
                j: target.j(),
                delta: target.delta(),
                sigma,
                beta: bound.beta,
                tv_target,
                required_k: required_steps,
                budget,
            })))
        }
        Err(e) => return Err(e),
    };
    let tv_bound = tv_bound_after(&bound, k);
    Ok(Certificate {
        spec: *spec,
        target: *target,
        sigma,
        k,
        tv_bound,
        confidence: compose_confidence(sigma, tv_bound),
    })
}

/// Full certificate: choose `(J, delta)` per `mode`, then the number of
/// final-stage steps that brings the TV bound under `tv_target`.
pub fn certify(
    spec: &GuaranteeSpec,
    tv_target: f64,
    uniform_weight: f64,
    mode: DeltaMode,
    budget: u64,
) -> Result<Certificate> {
    if !(tv_target > 0.0 && tv_target < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "TV target must lie in (0, 1), got {tv_target}"
        )));
    }
    minorization_constant(&TargetSpec::new(1.0, 1.0)?, uniform_weight)?;
    let target = select_target(spec, tv_target, uniform_weight, mode)?;
    certify_target(spec, &target, tv_target, uniform_weight, budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn target(j: f64, d: f64) -> TargetSpec {
        TargetSpec::new(j, d).unwrap()
    }

    #[test]
    fn minorization_examples() {
        let b = minorization_constant(&target(1.0, 1e9), 0.7).unwrap();
        assert!((b.beta - 0.7).abs() < 1e-8);
        let b = minorization_constant(&target(10.0, 0.5), 1.0).unwrap();
        assert!((b.beta - 1.693_508_780_843_028_7e-5).abs() < 1e-17);
        assert_eq!(
            minorization_constant(&target(1.0, 0.5), 0.0),
            Err(Error::NoIndependenceComponent)
        );
        assert!(minorization_constant(&target(1.0, 0.5), 1.5).is_err());
    }

    #[test]
    fn tv_bound_examples() {
        let b = minorization_constant(&target(10.0, 0.5), 1.0).unwrap();
        assert_eq!(tv_bound_after(&b, 0), 1.0);
        // oracle: (1 - beta)^271930 = 0.0099997276...
        assert!((tv_bound_after(&b, 271_930) - 0.009_999_727_637_911_285).abs() < 1e-12);
        let full = minorization_constant(&target(1.0, 1e300), 1.0).unwrap();
        assert_eq!(full.beta, 1.0);
        assert_eq!(tv_bound_after(&full, 0), 1.0);
        assert_eq!(tv_bound_after(&full, 1), 0.0);
    }

    #[test]
    fn steps_examples() {
        let b = minorization_constant(&target(10.0, 0.5), 1.0).unwrap();
        // oracle: ceil(ln 0.01 / ln(1 - 3^-10)) = 271929 in 50-digit arithmetic
        assert_eq!(
            steps_for_tv(&b, 0.01, DEFAULT_STEP_BUDGET).unwrap(),
            271_929
        );
        let one = 1.0 - b.beta / 2.0;
        assert_eq!(steps_for_tv(&b, one, DEFAULT_STEP_BUDGET).unwrap(), 1);
        assert!(steps_for_tv(&b, 1.0, DEFAULT_STEP_BUDGET).is_err());
        assert!(steps_for_tv(&b, 0.0, DEFAULT_STEP_BUDGET).is_err());
        match steps_for_tv(&b, 0.01, 1000) {
            Err(Error::InfeasibleSteps {
                required_steps,
                budget,
            }) => {
                assert_eq!(required_steps, 271_929.0);
                assert_eq!(budget, 1000);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn certify_degenerate_spec() {
        let spec = GuaranteeSpec::new(1.0, 1.0, 0.9).unwrap();
        let c = certify(&spec, 0.05, 1.0, DeltaMode::Fixed(0.5), DEFAULT_STEP_BUDGET).unwrap();
        assert_eq!(c.target.j(), 1.0);
        assert_eq!(c.sigma, 1.0);
        assert!(c.k <= 10);
        assert!(c.confidence >= 0.95);
        let c = certify(&spec, 0.05, 1.0, DeltaMode::Optimize, DEFAULT_STEP_BUDGET).unwrap();
        assert_eq!(c.target.j(), 1.0);
    }

    #[test]
    fn certify_worked_example_is_infeasible() {
        let spec = GuaranteeSpec::new(0.1, 0.1, 0.95).unwrap();
        match certify(&spec, 0.01, 1.0, DeltaMode::Fixed(0.5), DEFAULT_STEP_BUDGET) {
            Err(Error::Infeasible(report)) => {
                assert_eq!(report.j, 112.0);
                // oracle (120-digit): beta = 3^-112, k = 1261322703410982628722...e54
                assert!((report.beta / 3.651_064_214_997_775_5e-54 - 1.0).abs() < 1e-15);
                assert!((report.required_k / 1.261_322_703_410_982_6e54 - 1.0).abs() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
        // with an unbounded budget the k itself is not representable in u64
        assert!(certify(&spec, 0.01, 1.0, DeltaMode::Fixed(0.5), u64::MAX).is_err());
    }

    #[test]
    fn certify_feasible_small_problem() {
        let spec = GuaranteeSpec::new(0.5, 0.5, 0.6).unwrap();
        let c = certify(&spec, 0.05, 1.0, DeltaMode::Fixed(1.0), DEFAULT_STEP_BUDGET).unwrap();
        assert_eq!(c.confidence, c.sigma - c.tv_bound);
        assert!(c.tv_bound <= 0.05);
        assert!(c.sigma >= 0.6);
        let bound = minorization_constant(&c.target, 1.0).unwrap();
        assert!(tv_bound_after(&bound, c.k - 1) > 0.05);
    }

    #[test]
    fn min_steps_never_worse_than_optimize() {
        let spec = GuaranteeSpec::new(0.3, 0.3, 0.9).unwrap();
        let opt = select_target(&spec, 0.05, 1.0, DeltaMode::Optimize).unwrap();
        let fast = select_target(&spec, 0.05, 1.0, DeltaMode::MinSteps).unwrap();
        let steps = |t: &TargetSpec| required_steps(&minorization_constant(t, 1.0).unwrap(), 0.05);
        assert!(steps(&fast) <= steps(&opt));
        assert!(certify(&spec, 0.05, 1.0, DeltaMode::MinSteps, DEFAULT_STEP_BUDGET).is_ok());
    }

    #[test]
    fn rejects_tv_target_above_sigma_target() {
        let spec = GuaranteeSpec::new(0.5, 0.5, 0.6).unwrap();
        assert!(certify(&spec, 0.7, 1.0, DeltaMode::Fixed(1.0), DEFAULT_STEP_BUDGET).is_err());
        assert_eq!(
            certify(&spec, 0.05, 0.0, DeltaMode::Fixed(1.0), DEFAULT_STEP_BUDGET),
            Err(Error::NoIndependenceComponent)
        );
    }

    proptest! {
        #[test]
        fn tv_bound_is_monotone(j in 1.0f64..30.0, d in 0.1f64..5.0, w in 0.01f64..=1.0, k in 0u64..100_000) {
            let b = minorization_constant(&target(j, d), w).unwrap();
            prop_assert!(tv_bound_after(&b, k + 1) <= tv_bound_after(&b, k));
        }

        #[test]
        fn steps_for_tv_is_exact(j in 1.0f64..12.0, d in 0.2f64..5.0, w in 0.05f64..=1.0, tv in 1e-6f64..0.99) {
            let b = minorization_constant(&target(j, d), w).unwrap();
            if let Ok(k) = steps_for_tv(&b, tv, 100_000_000) {
                prop_assert!(tv_bound_after(&b, k) <= tv);
                if k > 0 {
                    prop_assert!(tv_bound_after(&b, k - 1) > tv);
                }
            }
        }

        #[test]
        fn optimize_mode_never_needs_larger_j(e in 0.05f64..=1.0, a in 0.05f64..=1.0, st in 0.1f64..0.95) {
            let spec = GuaranteeSpec::new(e, a, st).unwrap();
            let tv = st / 2.0;
            let opt = select_target(&spec, tv, 1.0, DeltaMode::Optimize).unwrap();
            let fixed = select_target(&spec, tv, 1.0, DeltaMode::Fixed(0.5)).unwrap();
            prop_assert!(opt.j() <= fixed.j());
        }
    }
}
