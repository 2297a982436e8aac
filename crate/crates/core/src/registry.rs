//! Named test functions, scaled to `[0, 1]` with known maximizers.
//!
//! | name                   | domain              | U                                            | max at        |
//! |------------------------|---------------------|----------------------------------------------|---------------|
//! | `bumps1d`              | `[0, 1]`            | `max_i h_i exp(-((t - c_i)/w_i)^2)`          | `t = 0.72`    |
//! | `plateau1d`            | `[0, 1]`            | `1` on `[0.45, 0.55]`, `0.2` elsewhere       | the plateau   |
//! | `rastrigin-scaled-Nd`  | `[-5.12, 5.12]^N`   | `1 - rastrigin(t) / (46.2144 N)`             | origin        |
//! | `ackley-scaled-Nd`     | `[-5, 5]^N`         | `1 - ackley(t) / (20 + e)`                   | origin        |
//!
//! Every name also has a `noisy-` variant: an expected-value criterion whose
//! draws are Bernoulli with success probability `U(t)`.

use std::f64::consts::{E, PI};
use std::sync::Arc;

use crate::domain::{
    scale_criterion, BernoulliNoise, BoundedDomain, Criterion, ExpectedValueCriterion,
};
use crate::error::{Error, Result};

const BUMP_HEIGHTS: [f64; 4] = [0.55, 0.8, 1.0, 0.35];
const BUMP_CENTERS: [f64; 4] = [0.12, 0.35, 0.72, 0.9];
const BUMP_WIDTHS: [f64; 4] = [0.04, 0.06, 0.025, 0.05];

const RASTRIGIN_HALF_WIDTH: f64 = 5.12;
const ACKLEY_HALF_WIDTH: f64 = 5.0;

/// Per-axis upper bound of `x^2 - 10 cos(2 pi x) + 10` on `[-5.12, 5.12]`.
pub const RASTRIGIN_AXIS_MAX: f64 = RASTRIGIN_HALF_WIDTH * RASTRIGIN_HALF_WIDTH + 20.0;

pub fn bumps1d(theta: &[f64]) -> f64 {
    let t = theta[0];
    (0..4)
        .map(|i| BUMP_HEIGHTS[i] * (-((t - BUMP_CENTERS[i]) / BUMP_WIDTHS[i]).powi(2)).exp())
        .fold(0.0, f64::max)
}

pub fn plateau1d(theta: &[f64]) -> f64 {
    if (0.45..=0.55).contains(&theta[0]) {
        1.0
    } else {
        0.2
    }
}

pub fn rastrigin(theta: &[f64]) -> f64 {
    10.0 * theta.len() as f64
        + theta
            .iter()
            .map(|x| x * x - 10.0 * (2.0 * PI * x).cos())
            .sum::<f64>()
}

pub fn ackley(theta: &[f64]) -> f64 {
    let n = theta.len() as f64;
    let sq = theta.iter().map(|x| x * x).sum::<f64>() / n;
    let cs = theta.iter().map(|x| (2.0 * PI * x).cos()).sum::<f64>() / n;
    // exact zero at the origin would otherwise round to -4e-16
    (-20.0 * (-0.2 * sq.sqrt()).exp() - cs.exp() + 20.0 + E).max(0.0)
}

/// A registry entry.
#[derive(Clone)]
pub struct TestFunction {
    pub name: String,
    pub domain: BoundedDomain,
    pub criterion: Arc<dyn Criterion>,
    pub max_value: f64,
    pub maximizer: Vec<f64>,
}

impl std::fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TestFunction")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("max_value", &self.max_value)
            .field("maximizer", &self.maximizer)
            .finish()
    }
}

impl TestFunction {
    /// Bernoulli-noise expected-value version of this function.
    pub fn noisy(&self) -> Arc<dyn ExpectedValueCriterion> {
        Arc::new(BernoulliNoise(self.criterion.clone()))
    }
}

/// Base names accepted by [`lookup`].
pub const NAMES: [&str; 4] = ["bumps1d", "plateau1d", "rastrigin-scaled", "ackley-scaled"];

/// Splits `rastrigin-scaled-3d` into (`rastrigin-scaled`, Some(3)).
fn split_dim(name: &str) -> (&str, Option<usize>) {
    if let Some(stripped) = name.strip_suffix('d') {
        if let Some(pos) = stripped.rfind('-') {
            if let Ok(n) = stripped[pos + 1..].parse::<usize>() {
                return (&stripped[..pos], Some(n));
            }
        }
    }
    (name, None)
}

/// Looks up a deterministic test function. A `noisy-` prefix is accepted and
/// ignored here; use [`TestFunction::noisy`] for the expected-value form.
///
/// `dim` applies to the N-dimensional families when the name carries no
/// `-Nd` suffix (default 2). An explicit suffix must agree with `dim`.
pub fn lookup(name: &str, dim: Option<usize>) -> Result<TestFunction> {
    let bare = name.strip_prefix("noisy-").unwrap_or(name);
    let (base, suffix_dim) = split_dim(bare);
    if let (Some(a), Some(b)) = (suffix_dim, dim) {
        if a != b {
            return Err(Error::DimensionMismatch {
                expected: a,
                got: b,
            });
        }
    }
    let n = suffix_dim.or(dim).unwrap_or(2);
    if n == 0 {
        return Err(Error::InvalidParameter(
            "dimension must be at least 1".into(),
        ));
    }
    let one_d = |f: fn(&[f64]) -> f64, maximizer: f64| -> Result<TestFunction> {
        if let Some(d) = dim.filter(|&d| d != 1) {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: d,
            });
        }
        Ok(TestFunction {
            name: bare.to_string(),
            domain: BoundedDomain::cube(1, 0.0, 1.0)?,
            criterion: Arc::new(f),
            max_value: 1.0,
            maximizer: vec![maximizer],
        })
    };
    match (base, suffix_dim) {
        ("bumps1d", None) => one_d(bumps1d, BUMP_CENTERS[2]),
        ("plateau1d", None) => one_d(plateau1d, 0.5),
        ("rastrigin-scaled", _) => {
            let scaled = scale_criterion(
                |t: &[f64]| -rastrigin(t),
                -RASTRIGIN_AXIS_MAX * n as f64,
                0.0,
            )?;
            Ok(TestFunction {
                name: format!("rastrigin-scaled-{n}d"),
                domain: BoundedDomain::cube(n, -RASTRIGIN_HALF_WIDTH, RASTRIGIN_HALF_WIDTH)?,
                criterion: Arc::new(scaled),
                max_value: 1.0,
                maximizer: vec![0.0; n],
            })
        }
        ("ackley-scaled", _) => {
            let scaled = scale_criterion(|t: &[f64]| -ackley(t), -(20.0 + E), 0.0)?;
            Ok(TestFunction {
                name: format!("ackley-scaled-{n}d"),
                domain: BoundedDomain::cube(n, -ACKLEY_HALF_WIDTH, ACKLEY_HALF_WIDTH)?,
                criterion: Arc::new(scaled),
                max_value: 1.0,
                maximizer: vec![0.0; n],
            })
        }
        _ => Err(Error::UnknownFunction(name.to_string())),
    }
}
