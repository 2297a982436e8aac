use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::domain::BoundedDomain;
use crate::error::{Error, Result};

/// Proposal distribution `q(. | theta)`.
///
/// Walk scales are fractions of each axis width. Both components are
/// symmetric (`q(a | b) = q(b | a)`), so the proposal terms cancel in the
/// acceptance ratio. Proposals outside the box are rejected as moves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Proposal {
    /// Independent uniform draw from the whole box.
    Uniform,
    /// Gaussian random walk.
    Walk { scale: f64 },
    /// Walk with probability `walk_weight`, uniform otherwise.
    Mixture { walk_weight: f64, scale: f64 },
}

impl Proposal {
    pub fn walk(scale: f64) -> Result<Self> {
        check_scale(scale)?;
        Ok(Proposal::Walk { scale })
    }

    pub fn mixture(walk_weight: f64, scale: f64) -> Result<Self> {
        check_scale(scale)?;
        if !(0.0..1.0).contains(&walk_weight) {
            return Err(Error::InvalidParameter(format!(
                "walk weight must lie in [0, 1), got {walk_weight}"
            )));
        }
        Ok(Proposal::Mixture { walk_weight, scale })
    }

    /// Weight of the uniform-independence component.
    pub fn uniform_weight(&self) -> f64 {
        match *self {
            Proposal::Uniform => 1.0,
            Proposal::Walk { .. } => 0.0,
            Proposal::Mixture { walk_weight, .. } => 1.0 - walk_weight,
        }
    }

    /// Draws a candidate; it may fall outside `domain`.
    pub fn propose<R: RngCore + ?Sized>(
        &self,
        domain: &BoundedDomain,
        current: &[f64],
        rng: &mut R,
    ) -> Vec<f64> {
        match *self {
            Proposal::Uniform => domain.sample_coords(rng),
            Proposal::Walk { scale } => walk(domain, current, scale, rng),
            Proposal::Mixture { walk_weight, scale } => {
                if rng.random::<f64>() < walk_weight {
                    walk(domain, current, scale, rng)
                } else {
                    domain.sample_coords(rng)
                }
            }
        }
    }

    /// `(ln q(proposed | current), ln q(current | proposed))` up to a shared
    /// constant. Both components are symmetric, so this is `(0, 0)`.
    pub fn log_q_pair(&self, _current: &[f64], _proposed: &[f64]) -> (f64, f64) {
        (0.0, 0.0)
    }
}

fn check_scale(scale: f64) -> Result<()> {
    if scale.is_finite() && scale > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "walk scale must be finite and > 0, got {scale}"
        )))
    }
}

fn walk<R: RngCore + ?Sized>(
    domain: &BoundedDomain,
    current: &[f64],
    scale: f64,
    rng: &mut R,
) -> Vec<f64> {
    current
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let z: f64 = rng.sample(StandardNormal);
            x + scale * domain.width(i) * z
        })
        .collect()
}

impl FromStr for Proposal {
    type Err = Error;

    /// Parses `uniform`, `walk:SCALE` or `mix:WALK_WEIGHT,SCALE`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::InvalidParameter(format!(
                "cannot parse proposal `{s}`; expected uniform, walk:SCALE or mix:W,SCALE"
            ))
        };
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        match s.split_once(':') {
            None if s.trim() == "uniform" => Ok(Proposal::Uniform),
            Some(("walk", rest)) => Proposal::walk(num(rest)?),
            Some(("mix", rest)) => {
                let (w, scale) = rest.split_once(',').ok_or_else(bad)?;
                Proposal::mixture(num(w)?, num(scale)?)
            }
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for Proposal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Proposal::Uniform => write!(f, "uniform"),
            Proposal::Walk { scale } => write!(f, "walk:{scale}"),
            Proposal::Mixture { walk_weight, scale } => write!(f, "mix:{walk_weight},{scale}"),
        }
    }
}
