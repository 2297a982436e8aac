//! Confidence calculus for approximate global optimizers.
//!
//! A point `theta` is an `(epsilon, alpha)` approximate global optimizer of `U`
//! when `U` exceeds `U(theta) + epsilon` on at most an `alpha` fraction of the
//! domain. If `theta ~ pi_J` then this holds with probability at least
//!
//! ```text
//!                                   1
//! sigma = -----------------------------------------------------------------
//!         1 + [(1+d)/(eps+1+d)]^J * [(1/alpha)(1+d)/(eps+d) - 1] * (1+d)/d
//! ```
//!
//! with `d = delta`. For a chain state `theta_k` the confidence drops by the
//! total-variation distance between its law and `pi_J`.

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::target::TargetSpec;

/// Lower end of the bracket searched for delta.
pub const DELTA_SEARCH_MIN: f64 = 1e-6;
/// Upper end of the bracket searched for delta.
pub const DELTA_SEARCH_MAX: f64 = 1e3;
/// Golden-section stopping width, in `ln(delta)`.
pub const DELTA_SEARCH_TOL: f64 = 1e-9;
const DELTA_GRID_POINTS: usize = 1000;

/// Value imprecision, residual domain and desired confidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuaranteeSpec {
    epsilon: f64,
    alpha: f64,
    sigma_target: f64,
}

impl GuaranteeSpec {
    pub fn new(epsilon: f64, alpha: f64, sigma_target: f64) -> Result<Self> {
        check_approximation(epsilon, alpha)?;
        if !(sigma_target > 0.0 && sigma_target < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma target must lie in (0, 1), got {sigma_target}"
            )));
        }
        Ok(Self {
            epsilon,
            alpha,
            sigma_target,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn sigma_target(&self) -> f64 {
        self.sigma_target
    }

    /// True when `sigma == 1` for every `(J, delta)`.
    pub fn is_degenerate(&self) -> bool {
        bracket(self.epsilon, self.alpha, 1.0) <= 0.0
    }
}

fn check_approximation(epsilon: f64, alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in [0, 1], got {epsilon}"
        )));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 1] (alpha = 0 gives no guarantee), got {alpha}"
        )));
    }
    Ok(())
}

/// `(1/alpha)(1+d)/(eps+d) - 1`. Zero exactly when `eps = alpha = 1`.
fn bracket(epsilon: f64, alpha: f64, delta: f64) -> f64 {
    (1.0 + delta) / (alpha * (epsilon + delta)) - 1.0
}

/// `ln[(1+d)/(eps+1+d)]`, which is `<= 0`.
fn log_rho(epsilon: f64, delta: f64) -> f64 {
    -(epsilon / (1.0 + delta)).ln_1p()
}

/// Logarithm of the term added to 1 in the denominator of sigma.
/// `-inf` in the degenerate case.
fn log_odds_against(epsilon: f64, alpha: f64, j: f64, delta: f64) -> f64 {
    let c = bracket(epsilon, alpha, delta);
    if c <= 0.0 {
        return f64::NEG_INFINITY;
    }
    j * log_rho(epsilon, delta) + c.ln() + ((1.0 + delta) / delta).ln()
}

fn sigma_from_log_odds(x: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        1.0
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// Confidence that a `pi_J` draw is an `(epsilon, alpha)` approximate optimizer.
pub fn sigma_for(epsilon: f64, alpha: f64, target: &TargetSpec) -> Result<f64> {
    check_approximation(epsilon, alpha)?;
    Ok(sigma_from_log_odds(log_odds_against(
        epsilon,
        alpha,
        target.j(),
        target.delta(),
    )))
}

pub fn sigma(spec: &GuaranteeSpec, target: &TargetSpec) -> f64 {
    sigma_from_log_odds(log_odds_against(
        spec.epsilon,
        spec.alpha,
        target.j(),
        target.delta(),
    ))
}

fn sigma_raw(spec: &GuaranteeSpec, j: f64, delta: f64) -> f64 {
    sigma_from_log_odds(log_odds_against(spec.epsilon, spec.alpha, j, delta))
}

fn check_delta(delta: f64) -> Result<()> {
    if delta.is_finite() && delta > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "delta must be finite and > 0, got {delta}"
        )))
    }
}

/// Smallest integer `J >= 1` with `sigma(spec, (J, delta)) >= sigma_target`.
///
/// Errors with [`Error::Unreachable`] when `epsilon = 0` and the target is not
/// already met at `J = 1`: sigma does not depend on `J` in that case.
pub fn min_j(spec: &GuaranteeSpec, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    let st = spec.sigma_target;
    if sigma_raw(spec, 1.0, delta) >= st {
        return Ok(1.0);
    }
    let lr = log_rho(spec.epsilon, delta);
    if lr == 0.0 {
        return Err(Error::Unreachable {
            epsilon: spec.epsilon,
            alpha: spec.alpha,
            delta,
            sigma_target: st,
        });
    }
    // C > 0 here, otherwise sigma(1) = 1 would have returned above.
    let log_c = bracket(spec.epsilon, spec.alpha, delta).ln() + ((1.0 + delta) / delta).ln();
    assert!(
        log_c.is_finite(),
        "bracket factor must be positive past the J = 1 check"
    );
    let log_needed = ((1.0 - st) / st).ln() - log_c;
    let mut j = (log_needed / lr).ceil().max(1.0);
    // floating-point fix-up so that the returned J is exact for `sigma`
    while sigma_raw(spec, j, delta) < st {
        j += 1.0;
    }
    while j > 1.0 && sigma_raw(spec, j - 1.0, delta) >= st {
        j -= 1.0;
    }
    Ok(j)
}

fn golden_min(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a) > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Minimizes `f(ln delta)` over the delta bracket.
///
/// Golden-section over the whole bracket, plus a log-spaced grid scan refined
/// by golden-section around its best cell; the better of the two (and of the
/// bracket endpoints) wins. Returns `(delta, f(ln delta))`.
pub(crate) fn minimize_over_log_delta(f: &dyn Fn(f64) -> f64) -> (f64, f64) {
    let (lo, hi) = (DELTA_SEARCH_MIN.ln(), DELTA_SEARCH_MAX.ln());
    let mut candidates = vec![
        golden_min(f, lo, hi, DELTA_SEARCH_TOL),
        (lo, f(lo)),
        (hi, f(hi)),
    ];

    let step = (hi - lo) / (DELTA_GRID_POINTS - 1) as f64;
    let grid: Vec<(f64, f64)> = (0..DELTA_GRID_POINTS)
        .map(|i| {
            let x = if i == DELTA_GRID_POINTS - 1 {
                hi
            } else {
                lo + step * i as f64
            };
            (x, f(x))
        })
        .collect();
    let best = grid
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let left = grid[best.saturating_sub(1)].0;
    let right = grid[(best + 1).min(DELTA_GRID_POINTS - 1)].0;
    candidates.push(grid[best]);
    candidates.push(golden_min(f, left, right, DELTA_SEARCH_TOL));

    let (x, v) = candidates
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("candidate list is non-empty");
    (x.exp(), v)
}

/// The delta maximizing sigma for fixed `(epsilon, alpha, J)`.
/// Returns `(delta, sigma)`.
pub fn optimal_delta(epsilon: f64, alpha: f64, j: f64) -> Result<(f64, f64)> {
    check_approximation(epsilon, alpha)?;
    if !(j.is_finite() && j >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "J must be a finite number >= 1, got {j}"
        )));
    }
    // Minimizing the log-odds avoids the saturation of sigma near 1.
    let objective = |x: f64| log_odds_against(epsilon, alpha, j, x.exp());
    let (delta, log_odds) = minimize_over_log_delta(&objective);
    Ok((delta, sigma_from_log_odds(log_odds)))
}

/// The `(J, delta)` pair reaching `sigma_target` with the smallest `J`.
/// Among deltas reaching that `J`, the one with the largest sigma is returned.
pub fn min_delta_j(spec: &GuaranteeSpec) -> Result<TargetSpec> {
    if spec.is_degenerate() {
        return TargetSpec::new(1.0, 1.0);
    }
    let st = spec.sigma_target;
    // Continuous relaxation of `min_j`, with +inf where unreachable.
    let relaxed_j = |x: f64| -> f64 {
        let delta = x.exp();
        if sigma_raw(spec, 1.0, delta) >= st {
            return 1.0;
        }
        let lr = log_rho(spec.epsilon, delta);
        if lr == 0.0 {
            return f64::INFINITY;
        }
        let log_c = bracket(spec.epsilon, spec.alpha, delta).ln() + ((1.0 + delta) / delta).ln();
        ((((1.0 - st) / st).ln() - log_c) / lr).max(1.0)
    };
    let (delta_j, relaxed) = minimize_over_log_delta(&relaxed_j);
    if !relaxed.is_finite() {
        return Err(Error::Unreachable {
            epsilon: spec.epsilon,
            alpha: spec.alpha,
            delta: delta_j,
            sigma_target: st,
        });
    }
    let j = min_j(spec, delta_j)?;
    let (delta_sigma, best_sigma) = optimal_delta(spec.epsilon, spec.alpha, j)?;
    let delta = if best_sigma >= sigma_raw(spec, j, delta_j) {
        delta_sigma
    } else {
        delta_j
    };
    TargetSpec::new(j, delta)
}

/// Auxiliary parameters used in the proof of the confidence bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProofParams {
    pub rho: f64,
    pub alpha_bar: f64,
}

/// `rho = (1+d)/(eps+1+d)`, `alpha_bar = alpha (eps+d)/(1+d)`.
pub fn proof_params_from_spec(epsilon: f64, alpha: f64, delta: f64) -> Result<ProofParams> {
    check_approximation(epsilon, alpha)?;
    check_delta(delta)?;
    Ok(ProofParams {
        rho: (1.0 + delta) / (epsilon + 1.0 + delta),
        alpha_bar: alpha * (epsilon + delta) / (1.0 + delta),
    })
}

/// Inverse of [`proof_params_from_spec`]: returns `(epsilon, alpha)`.
pub fn spec_from_proof_params(params: &ProofParams, delta: f64) -> Result<(f64, f64)> {
    check_delta(delta)?;
    let rho_min = (1.0 + delta) / (2.0 + delta);
    // small slack for values produced by the forward map
    let slack = 4.0 * f64::EPSILON;
    if !(params.rho >= rho_min * (1.0 - slack) && params.rho <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "rho must lie in [{rho_min}, 1], got {}",
            params.rho
        )));
    }
    let epsilon = ((1.0 - params.rho) / params.rho) * (1.0 + delta);
    let alpha_bar_max = (epsilon + delta) / (1.0 + delta);
    if !(params.alpha_bar > 0.0 && params.alpha_bar <= alpha_bar_max * (1.0 + slack)) {
        return Err(Error::InvalidParameter(format!(
            "alpha_bar must lie in (0, {alpha_bar_max}], got {}",
            params.alpha_bar
        )));
    }
    let alpha = (1.0 + delta) / (epsilon + delta) * params.alpha_bar;
    Ok((epsilon, alpha))
}

/// Sigma written in terms of the proof parameters:
/// `1 / (1 + rho^J (1 - alpha_bar)/alpha_bar (1+d)/d)`.
pub fn sigma_from_proof_params(params: &ProofParams, j: f64, delta: f64) -> f64 {
    let odds = (1.0 - params.alpha_bar) / params.alpha_bar;
    if odds <= 0.0 {
        return 1.0;
    }
    let x = j * params.rho.ln() + odds.ln() + ((1.0 + delta) / delta).ln();
    sigma_from_log_odds(x)
}

/// Confidence for a chain state: `max(0, sigma - tv_bound)`.
pub fn compose_confidence(sigma: f64, tv_bound: f64) -> f64 {
    (sigma - tv_bound).max(0.0)
}

/// A finite-time statement: after `k` final-stage steps at target `(J, delta)`
/// the state is an `(epsilon, alpha)` approximate global optimizer with
/// probability at least `confidence = sigma - tv_bound`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    pub spec: GuaranteeSpec,
    pub target: TargetSpec,
    pub sigma: f64,
    pub k: u64,
    pub tv_bound: f64,
    pub confidence: f64,
}

impl Certificate {
    pub fn is_reportable(&self) -> bool {
        self.confidence > 0.0
    }
}

/// Rounds to 12 significant digits.
pub fn round_sig12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

#[derive(Serialize)]
struct CertificateJson {
    epsilon: f64,
    alpha: f64,
    sigma_target: f64,
    #[serde(rename = "J")]
    j: f64,
    delta: f64,
    sigma: f64,
    k: u64,
    tv_bound: f64,
    confidence: f64,
}

impl Serialize for Certificate {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        CertificateJson {
            epsilon: round_sig12(self.spec.epsilon),
            alpha: round_sig12(self.spec.alpha),
            sigma_target: round_sig12(self.spec.sigma_target),
            j: round_sig12(self.target.j()),
            delta: round_sig12(self.target.delta()),
            sigma: round_sig12(self.sigma),
            k: self.k,
            tv_bound: round_sig12(self.tv_bound),
            confidence: round_sig12(self.confidence),
        }
        .serialize(serializer)
    }
}
