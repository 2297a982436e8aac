//! Equilibrium distributions `pi_J(d theta) ∝ (U(theta) + delta)^J d theta`.
//!
//! `1/J` acts as the temperature. All density work happens in log space since
//! `(u + delta)^J` leaves the floating-point range for the `J` values that
//! certificates routinely require.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    #[serde(rename = "J")]
    j: f64,
    delta: f64,
}

impl TargetSpec {
    pub fn new(j: f64, delta: f64) -> Result<Self> {
        if !(j.is_finite() && j >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "J must be a finite number >= 1, got {j}"
            )));
        }
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "delta must be finite and > 0, got {delta}"
            )));
        }
        Ok(Self { j, delta })
    }

    pub fn j(&self) -> f64 {
        self.j
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `J` as a positive integer, if it is one.
    pub fn integer_j(&self) -> Option<u64> {
        (self.j.fract() == 0.0 && self.j <= u64::MAX as f64).then_some(self.j as u64)
    }

    /// The same target with `J` rounded up to an integer.
    pub fn with_integer_j(&self) -> Self {
        Self {
            j: self.j.ceil(),
            delta: self.delta,
        }
    }

    pub fn log_unnormalized_density(&self, u: f64) -> f64 {
        log_unnormalized_density(self, u)
    }
}

/// `J * ln(u + delta)`.
pub fn log_unnormalized_density(target: &TargetSpec, u: f64) -> f64 {
    target.j * (u + target.delta).ln()
}

/// Log Metropolis-Hastings ratio for a move from a point with criterion value
/// `u_current` to one with `u_proposed`. Acceptance probability is
/// `min(1, exp(ratio))`.
pub fn acceptance_log_ratio(
    target: &TargetSpec,
    u_current: f64,
    u_proposed: f64,
    log_q_forward: f64,
    log_q_backward: f64,
) -> f64 {
    target.j * ((u_proposed + target.delta).ln() - (u_current + target.delta).ln()) + log_q_backward
        - log_q_forward
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_invalid_parameters() {
        assert!(TargetSpec::new(0.0, 1.0).is_err());
        assert!(TargetSpec::new(0.5, 1.0).is_err());
        assert!(TargetSpec::new(1.0, 0.0).is_err());
        assert!(TargetSpec::new(f64::INFINITY, 1.0).is_err());
        assert!(TargetSpec::new(1.0, -0.1).is_err());
    }

    #[test]
    fn log_density_examples() {
        let t = TargetSpec::new(1.0, 1.0).unwrap();
        assert_eq!(t.log_unnormalized_density(0.0), 0.0);
        let t = TargetSpec::new(3.0, 0.5).unwrap();
        assert_eq!(t.log_unnormalized_density(0.5), 0.0);
        let t = TargetSpec::new(20.0, 0.5).unwrap();
        assert!((t.log_unnormalized_density(1.0) - 8.109302162163288).abs() < 1e-12);
    }

    #[test]
    fn acceptance_examples() {
        let t = TargetSpec::new(3.0, 0.5).unwrap();
        assert_eq!(acceptance_log_ratio(&t, 0.4, 0.4, 0.0, 0.0), 0.0);
        let r = acceptance_log_ratio(&t, 0.2, 0.1, 0.0, 0.0);
        assert!((r - (-0.462_452_039_481_774_8)).abs() < 1e-12);
        assert!((r.exp().min(1.0) - 0.6297376093294461).abs() < 1e-12);
    }

    #[test]
    fn integer_j() {
        assert_eq!(TargetSpec::new(6.0, 0.5).unwrap().integer_j(), Some(6));
        assert_eq!(TargetSpec::new(6.5, 0.5).unwrap().integer_j(), None);
        assert_eq!(TargetSpec::new(6.5, 0.5).unwrap().with_integer_j().j(), 7.0);
    }

    proptest! {
        #[test]
        fn density_sharpens_with_j(
            j in 1.0f64..200.0, dj in 0.5f64..50.0, delta in 1e-3f64..10.0,
            u1 in 0.0f64..1.0, u2 in 0.0f64..1.0,
        ) {
            prop_assume!((u1 - u2).abs() > 1e-6);
            let (hi, lo) = if u1 > u2 { (u1, u2) } else { (u2, u1) };
            let a = TargetSpec::new(j, delta).unwrap();
            let b = TargetSpec::new(j + dj, delta).unwrap();
            let gap_a = a.log_unnormalized_density(hi) - a.log_unnormalized_density(lo);
            let gap_b = b.log_unnormalized_density(hi) - b.log_unnormalized_density(lo);
            prop_assert!(gap_a > 0.0);
            prop_assert!(gap_b > gap_a);
        }

        #[test]
        fn swapping_states_negates_symmetric_ratio(
            j in 1.0f64..500.0, delta in 1e-3f64..10.0, u1 in 0.0f64..=1.0, u2 in 0.0f64..=1.0,
        ) {
            let t = TargetSpec::new(j, delta).unwrap();
            let fwd = acceptance_log_ratio(&t, u1, u2, 0.0, 0.0);
            let bwd = acceptance_log_ratio(&t, u2, u1, 0.0, 0.0);
            prop_assert_eq!(fwd, -bwd);
        }
    }
}
