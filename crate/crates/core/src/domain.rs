//! Optimization domains and criteria.
//!
//! A domain is an axis-aligned box in `R^N`. Criteria map points of the box
//! to `[0, 1]`; values outside that interval are reported as errors, never
//! clamped, because every certificate depends on the range.

use rand::{Rng, RngCore};

use crate::error::{Error, Result};

/// Axis-aligned box `[lower_1, upper_1] x ... x [lower_N, upper_N]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundedDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoundedDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::InvalidDomain("dimension must be at least 1".into()));
        }
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidDomain(format!(
                    "axis {i}: need finite lower < upper, got [{lo}, {hi}]"
                )));
            }
        }
        let domain = Self { lower, upper };
        let volume = domain.volume();
        if !(volume.is_finite() && volume > 0.0) {
            return Err(Error::InvalidDomain(format!(
                "volume {volume} is not finite and positive"
            )));
        }
        Ok(domain)
    }

    /// The cube `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    /// Lebesgue volume of the box.
    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.width(i)).product()
    }

    /// Closed-box membership test.
    pub fn contains(&self, coords: &[f64]) -> bool {
        coords.len() == self.dim()
            && coords
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (lo, hi))| *lo <= *x && *x <= *hi)
    }

    /// Validates `coords` and wraps them as a [`Point`] of this domain.
    pub fn point(&self, coords: Vec<f64>) -> Result<Point> {
        if coords.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: coords.len(),
            });
        }
        if !self.contains(&coords) {
            return Err(Error::PointOutsideDomain { coords });
        }
        Ok(Point(coords))
    }

    pub fn center(&self) -> Point {
        Point(
            self.lower
                .iter()
                .zip(&self.upper)
                .map(|(lo, hi)| 0.5 * (lo + hi))
                .collect(),
        )
    }

    /// Draws a point uniformly from the box, one uniform variate per axis.
    pub fn sample_uniform<R: RngCore + ?Sized>(&self, rng: &mut R) -> Point {
        Point(self.sample_coords(rng))
    }

    pub(crate) fn sample_coords<R: RngCore + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
            .collect()
    }
}

/// A point known to lie inside its domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    /// Caller guarantees containment.
    pub(crate) fn from_trusted(coords: Vec<f64>) -> Self {
        Point(coords)
    }
}

/// Deterministic criterion `U: domain -> [0, 1]`, to be maximized.
///
/// Implementations must be pure: the same point always yields the same value.
pub trait Criterion: Send + Sync {
    fn value(&self, theta: &[f64]) -> f64;
}

impl<F> Criterion for F
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn value(&self, theta: &[f64]) -> f64 {
        self(theta)
    }
}

impl<C: Criterion + ?Sized> Criterion for std::sync::Arc<C> {
    fn value(&self, theta: &[f64]) -> f64 {
        (**self).value(theta)
    }
}

fn check_unit(value: f64, theta: &[f64]) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::CriterionOutOfRange {
            value,
            coords: theta.to_vec(),
        })
    }
}

/// Evaluates `criterion` and rejects values outside `[0, 1]` (including NaN).
pub fn checked_value<C: Criterion + ?Sized>(criterion: &C, theta: &[f64]) -> Result<f64> {
    check_unit(criterion.value(theta), theta)
}

/// Affine rescaling of a bounded raw criterion onto `[0, 1]`.
#[derive(Debug, Clone)]
pub struct ScaledCriterion<F> {
    raw: F,
    known_lower: f64,
    known_upper: f64,
}

impl<F> ScaledCriterion<F> {
    pub fn known_lower(&self) -> f64 {
        self.known_lower
    }

    pub fn known_upper(&self) -> f64 {
        self.known_upper
    }
}

impl<F> Criterion for ScaledCriterion<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn value(&self, theta: &[f64]) -> f64 {
        ((self.raw)(theta) - self.known_lower) / (self.known_upper - self.known_lower)
    }
}

/// Maps `raw` onto `[0, 1]` given bounds `known_lower <= raw <= known_upper`.
///
/// The map is increasing, so maximizers of `raw` are maximizers of the result.
/// The bounds are asserted by the caller; a raw value outside them surfaces
/// later as [`Error::CriterionOutOfRange`].
pub fn scale_criterion<F>(raw: F, known_lower: f64, known_upper: f64) -> Result<ScaledCriterion<F>>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    if !(known_lower.is_finite() && known_upper.is_finite() && known_lower < known_upper) {
        return Err(Error::InvalidParameter(format!(
            "criterion bounds must satisfy lower < upper, got [{known_lower}, {known_upper}]"
        )));
    }
    Ok(ScaledCriterion {
        raw,
        known_lower,
        known_upper,
    })
}

/// Expected-value criterion `U(theta) = E[g(x, theta)]`, `x ~ p_x(.; theta)`.
///
/// Only single draws of `g` are exposed. Each draw must lie in `[0, 1]`.
pub trait ExpectedValueCriterion: Send + Sync {
    fn sample_g(&self, theta: &[f64], rng: &mut dyn RngCore) -> f64;
}

impl<E: ExpectedValueCriterion + ?Sized> ExpectedValueCriterion for Box<E> {
    fn sample_g(&self, theta: &[f64], rng: &mut dyn RngCore) -> f64 {
        (**self).sample_g(theta, rng)
    }
}

impl<E: ExpectedValueCriterion + ?Sized> ExpectedValueCriterion for std::sync::Arc<E> {
    fn sample_g(&self, theta: &[f64], rng: &mut dyn RngCore) -> f64 {
        (**self).sample_g(theta, rng)
    }
}

pub fn checked_draw<E: ExpectedValueCriterion + ?Sized>(
    criterion: &E,
    theta: &[f64],
    rng: &mut dyn RngCore,
) -> Result<f64> {
    check_unit(criterion.sample_g(theta, rng), theta)
}

/// Monte Carlo mean of `n` draws of `g` at `theta`. For reporting only.
pub fn estimate_expected_value<E, R>(
    criterion: &E,
    theta: &Point,
    n: usize,
    rng: &mut R,
) -> Result<f64>
where
    E: ExpectedValueCriterion + ?Sized,
    R: RngCore,
{
    if n == 0 {
        return Err(Error::InvalidParameter(
            "sample count must be at least 1".into(),
        ));
    }
    let mut sum = 0.0;
    for _ in 0..n {
        sum += checked_draw(criterion, theta.coords(), rng)?;
    }
    Ok(sum / n as f64)
}

/// A deterministic criterion viewed as an expected-value criterion whose
/// draws have zero variance. Consumes no randomness.
#[derive(Debug, Clone)]
pub struct ZeroVariance<C>(pub C);

impl<C: Criterion> ExpectedValueCriterion for ZeroVariance<C> {
    fn sample_g(&self, theta: &[f64], _rng: &mut dyn RngCore) -> f64 {
        self.0.value(theta)
    }
}

/// `g(x, theta) = 1{x < U(theta)}` with `x ~ Uniform(0, 1)`, so `E[g] = U`.
#[derive(Debug, Clone)]
pub struct BernoulliNoise<C>(pub C);

impl<C: Criterion> ExpectedValueCriterion for BernoulliNoise<C> {
    fn sample_g(&self, theta: &[f64], rng: &mut dyn RngCore) -> f64 {
        let u = self.0.value(theta);
        if rng.random::<f64>() < u {
            1.0
        } else {
            0.0
        }
    }
}
