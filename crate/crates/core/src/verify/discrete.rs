use nalgebra::{DMatrix, DVector};

use crate::domain::{checked_value, BoundedDomain, Criterion};
use crate::error::{Error, Result};
use crate::target::TargetSpec;

/// Largest grid accepted by the exact-matrix checks.
pub const MAX_GRID_CELLS: usize = 2000;

/// Below this TV the trajectory is reported as exactly zero, which avoids
/// grinding through subnormal arithmetic.
const TV_FLOOR: f64 = 1e-290;

/// Proposal on grid cells, mirroring the continuous proposals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridProposal {
    Uniform,
    /// Step of `s` cells with `s` uniform on `{-radius..radius} \ {0}`;
    /// steps off the grid are rejected.
    Walk {
        radius: usize,
    },
    Mixture {
        walk_weight: f64,
        radius: usize,
    },
}

impl GridProposal {
    pub fn uniform_weight(&self) -> f64 {
        match *self {
            GridProposal::Uniform => 1.0,
            GridProposal::Walk { .. } => 0.0,
            GridProposal::Mixture { walk_weight, .. } => 1.0 - walk_weight,
        }
    }
}

/// The chain targeting `pi_J ∝ (u_i + delta)^J` on a finite set of cells.
#[derive(Debug, Clone)]
pub struct GridChain {
    values: Vec<f64>,
    target: TargetSpec,
}

impl GridChain {
    pub fn new(values: Vec<f64>, target: TargetSpec) -> Result<Self> {
        if values.is_empty() || values.len() > MAX_GRID_CELLS {
            return Err(Error::GridTooLarge {
                cells: values.len(),
                max: MAX_GRID_CELLS,
            });
        }
        if let Some(&bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::CriterionOutOfRange {
                value: bad,
                coords: vec![],
            });
        }
        Ok(Self { values, target })
    }

    /// Evaluates a 1-D criterion at the centers of `cells` equal cells.
    pub fn from_criterion<C: Criterion + ?Sized>(
        domain: &BoundedDomain,
        criterion: &C,
        cells: usize,
        target: TargetSpec,
    ) -> Result<Self> {
        if domain.dim() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: domain.dim(),
            });
        }
        if cells == 0 || cells > MAX_GRID_CELLS {
            return Err(Error::GridTooLarge {
                cells,
                max: MAX_GRID_CELLS,
            });
        }
        let (lo, w) = (domain.lower()[0], domain.width(0));
        let values = (0..cells)
            .map(|i| checked_value(criterion, &[lo + (i as f64 + 0.5) * w / cells as f64]))
            .collect::<Result<Vec<_>>>()?;
        Self::new(values, target)
    }

    pub fn cells(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn target(&self) -> &TargetSpec {
        &self.target
    }

    fn log_weights(&self) -> Vec<f64> {
        self.values
            .iter()
            .map(|&u| self.target.log_unnormalized_density(u))
            .collect()
    }

    /// Normalized `(u_i + delta)^J`, computed in log space.
    pub fn stationary_exact(&self) -> DVector<f64> {
        let lw = self.log_weights();
        let m = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = lw.iter().map(|l| (l - m).exp()).collect();
        let z: f64 = w.iter().sum();
        DVector::from_iterator(w.len(), w.into_iter().map(|x| x / z))
    }

    /// Row-stochastic Metropolis–Hastings transition matrix.
    pub fn transition_matrix(&self, proposal: GridProposal) -> Result<DMatrix<f64>> {
        let n = self.cells();
        let (walk_weight, radius) = match proposal {
            GridProposal::Uniform => (0.0, 0),
            GridProposal::Walk { radius } => (1.0, radius),
            GridProposal::Mixture {
                walk_weight,
                radius,
            } => (walk_weight, radius),
        };
        if !(0.0..=1.0).contains(&walk_weight) || (walk_weight > 0.0 && radius == 0) {
            return Err(Error::InvalidParameter(format!(
                "grid proposal needs walk weight in [0, 1] and radius >= 1, got {proposal:?}"
            )));
        }
        let lw = self.log_weights();
        let mut p = DMatrix::zeros(n, n);
        for i in 0..n {
            let mut off = 0.0;
            for j in 0..n {
                if j == i {
                    continue;
                }
                let mut q = (1.0 - walk_weight) / n as f64;
                if walk_weight > 0.0 && i.abs_diff(j) <= radius {
                    q += walk_weight / (2 * radius) as f64;
                }
                if q > 0.0 {
                    let v = q * (lw[j] - lw[i]).min(0.0).exp();
                    p[(i, j)] = v;
                    off += v;
                }
            }
            p[(i, i)] = (1.0 - off).max(0.0);
        }
        Ok(p)
    }
}

/// Stationary distribution of a row-stochastic matrix by LU, with the
/// normalization replacing one balance equation.
pub fn stationary_solved(p: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = p.nrows();
    let mut a = p.transpose() - DMatrix::identity(n, n);
    a.row_mut(n - 1).fill(1.0);
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    a.lu().solve(&rhs).ok_or_else(|| {
        Error::InvalidParameter("transition matrix has no unique stationary distribution".into())
    })
}

/// Best Doeblin constant for minorization by `pi` itself:
/// `min_{i,j} P_ij / pi_j`.
pub fn doeblin_constant(p: &DMatrix<f64>, pi: &DVector<f64>) -> f64 {
    let mut best = f64::INFINITY;
    for j in 0..p.ncols() {
        let col_min = p.column(j).min();
        best = best.min(col_min / pi[j]);
    }
    best
}

/// Exact `TV(delta_initial P^k, pi)` for `k = 0..=k_max`.
///
/// Propagates the deviation `d_k = mu_k - pi` rather than `mu_k`, and
/// re-projects it onto zero-sum vectors each step, so values far below
/// machine epsilon keep full relative accuracy. Values below `1e-290` are
/// reported as 0.
pub fn exact_tv_discretized(
    chain: &GridChain,
    proposal: GridProposal,
    initial_cell: usize,
    k_max: u64,
) -> Result<Vec<(u64, f64)>> {
    if initial_cell >= chain.cells() {
        return Err(Error::InvalidParameter(format!(
            "initial cell {initial_cell} outside a grid of {} cells",
            chain.cells()
        )));
    }
    let p = chain.transition_matrix(proposal)?;
    let pi = chain.stationary_exact();
    let mut d = -pi.clone();
    d[initial_cell] += 1.0;
    let mut next = DVector::zeros(d.len());
    let mut out = Vec::with_capacity(k_max as usize + 1);
    for k in 0..=k_max {
        let tv = 0.5 * d.lp_norm(1);
        if tv < TV_FLOOR {
            out.extend((k..=k_max).map(|k| (k, 0.0)));
            break;
        }
        out.push((k, tv));
        next.gemv_tr(1.0, &p, &d, 0.0);
        let drift = next.sum();
        next.axpy(-drift, &pi, 1.0);
        std::mem::swap(&mut d, &mut next);
    }
    Ok(out)
}

/// Marginal stationary law over two equal-volume cells of the expected-value
/// kernel with a uniform proposal, where each evaluation is a Bernoulli draw
/// with success probability `p[b]` in cell `b`.
///
/// The augmented chain tracks `(cell, m)` with `m` the number of successes
/// among the `J` stored draws, so the exact law is available from a
/// `2(J+1)`-state matrix.
pub fn mueller_two_cell_stationary(p: [f64; 2], j: u32, delta: f64) -> Result<[f64; 2]> {
    if p.iter().any(|v| !(0.0..=1.0).contains(v)) || delta.is_nan() || delta <= 0.0 || j == 0 {
        return Err(Error::InvalidParameter(format!(
            "need p in [0, 1], delta > 0, J >= 1; got p={p:?}, delta={delta}, J={j}"
        )));
    }
    let m_states = j as usize + 1;
    let n = 2 * m_states;
    let binom = |pb: f64, m: usize| -> f64 {
        let mut c = 1.0;
        for i in 0..m {
            c = c * (j as f64 - i as f64) / (i as f64 + 1.0);
        }
        c * pb.powi(m as i32) * (1.0 - pb).powi(j as i32 - m as i32)
    };
    let log_step = (1.0 + 1.0 / delta).ln();
    let mut mat = DMatrix::zeros(n, n);
    for b in 0..2 {
        for m in 0..m_states {
            let from = b * m_states + m;
            let mut off = 0.0;
            for (b2, &p2) in p.iter().enumerate() {
                for m2 in 0..m_states {
                    let to = b2 * m_states + m2;
                    let accept = ((m2 as f64 - m as f64) * log_step).min(0.0).exp();
                    let v = 0.5 * binom(p2, m2) * accept;
                    if to != from {
                        mat[(from, to)] += v;
                        off += v;
                    }
                }
            }
            mat[(from, from)] = 1.0 - off;
        }
    }
    let st = stationary_solved(&mat)?;
    let c0: f64 = st.rows(0, m_states).sum();
    let c1: f64 = st.rows(m_states, m_states).sum();
    Ok([c0 / (c0 + c1), c1 / (c0 + c1)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convergence::{minorization_constant, tv_bound_after};
    use crate::registry;

    fn bumps_chain(cells: usize) -> GridChain {
        let d = BoundedDomain::cube(1, 0.0, 1.0).unwrap();
        GridChain::from_criterion(
            &d,
            &registry::bumps1d,
            cells,
            TargetSpec::new(6.0, 0.5).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn rows_sum_to_one() {
        let c = bumps_chain(50);
        for prop in [
            GridProposal::Uniform,
            GridProposal::Walk { radius: 3 },
            GridProposal::Mixture {
                walk_weight: 0.5,
                radius: 2,
            },
        ] {
            let p = c.transition_matrix(prop).unwrap();
            for r in p.row_iter() {
                assert!((r.sum() - 1.0).abs() < 1e-14);
                assert!(r.min() >= 0.0);
            }
        }
    }

    #[test]
    fn lu_stationary_matches_closed_form() {
        let c = bumps_chain(200);
        for prop in [
            GridProposal::Uniform,
            GridProposal::Mixture {
                walk_weight: 0.7,
                radius: 4,
            },
        ] {
            let p = c.transition_matrix(prop).unwrap();
            let diff = (stationary_solved(&p).unwrap() - c.stationary_exact()).amax();
            assert!(diff < 1e-10, "{diff}");
        }
    }

    #[test]
    fn equal_mass_two_cells_mix_in_one_step() {
        let c = GridChain::new(vec![0.4, 0.4], TargetSpec::new(3.0, 0.2).unwrap()).unwrap();
        let tv = exact_tv_discretized(&c, GridProposal::Uniform, 0, 5).unwrap();
        assert_eq!(tv[0], (0, 0.5));
        assert!(tv[1..].iter().all(|&(_, v)| v == 0.0));
    }

    #[test]
    fn two_cells_decay_geometrically() {
        // P = [[1-a, a], [b, 1-b]] has TV_k = |1-a-b|^k * TV_0 from a point mass.
        let t = TargetSpec::new(2.0, 0.5).unwrap();
        let c = GridChain::new(vec![0.2, 0.9], t).unwrap();
        let r = ((0.2f64 + 0.5) / (0.9 + 0.5)).powi(2);
        let (a, b) = (0.5, 0.5 * r);
        let pi0 = b / (a + b);
        let lambda = 1.0 - a - b;
        let tv = exact_tv_discretized(&c, GridProposal::Uniform, 0, 60).unwrap();
        for (k, v) in tv {
            let expect = (1.0 - pi0) * lambda.abs().powi(k as i32);
            assert!(
                (v - expect).abs() <= 1e-12 * expect.max(1e-300),
                "k={k} {v} {expect}"
            );
        }
    }

    #[test]
    fn stationary_start_stays_put() {
        // k = 0 from pi is 0; a point mass on a one-cell grid is already pi.
        let c = GridChain::new(vec![0.3], TargetSpec::new(4.0, 0.1).unwrap()).unwrap();
        let tv = exact_tv_discretized(&c, GridProposal::Uniform, 0, 3).unwrap();
        assert!(tv.iter().all(|&(_, v)| v == 0.0));
    }

    #[test]
    fn exact_tv_below_bound_and_doeblin_dominates_formula() {
        let c = bumps_chain(100);
        let prop = GridProposal::Mixture {
            walk_weight: 0.5,
            radius: 2,
        };
        let b = minorization_constant(c.target(), prop.uniform_weight()).unwrap();
        let p = c.transition_matrix(prop).unwrap();
        assert!(doeblin_constant(&p, &c.stationary_exact()) >= b.beta);
        for start in [0, 71] {
            for (k, v) in exact_tv_discretized(&c, prop, start, 20_000).unwrap() {
                assert!(v <= tv_bound_after(&b, k), "k={k}");
            }
        }
    }

    #[test]
    fn mueller_marginal_is_expected_value_target() {
        for (p, j, delta) in [
            ([0.3, 0.8], 1, 0.5),
            ([0.0, 1.0], 1, 0.5),
            ([0.2, 0.6], 4, 0.25),
        ] {
            let got = mueller_two_cell_stationary(p, j, delta).unwrap();
            let w0 = (p[0] + delta).powi(j as i32);
            let w1 = (p[1] + delta).powi(j as i32);
            assert!((got[0] - w0 / (w0 + w1)).abs() < 1e-12, "{got:?}");
        }
    }

    #[test]
    fn grid_limits() {
        let t = TargetSpec::new(1.0, 1.0).unwrap();
        assert!(matches!(
            GridChain::new(vec![0.0; 2001], t),
            Err(Error::GridTooLarge { .. })
        ));
        assert!(GridChain::new(vec![1.5], t).is_err());
    }
}
