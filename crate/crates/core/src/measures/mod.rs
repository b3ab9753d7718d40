//! Finitely supported probability measures, exact Wasserstein distances and
//! the couplings that realize them.

mod measure;
mod order;
mod transport;

use serde::{Deserialize, Serialize};

pub use measure::{DiscreteMeasure, MASS_TOL, MIN_WEIGHT};
pub use order::stochastic_leq_uniform;
pub use transport::REDUCED_COST_TOL;

pub use crate::condexp::lp_distance_rv;
use crate::error::{Error, Result};
use crate::geometry::{Point, Space};

/// Largest support accepted by the exact transport solver.
pub const MAX_TRANSPORT_ATOMS: usize = 512;

/// A coupling of two discrete measures with its transport cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    pub p: f64,
    /// `plan[i][j]` is the mass moved from source atom `i` to target atom `j`.
    pub plan: Vec<Vec<f64>>,
    /// `Σ π_ij d(x_i, y_j)^p`.
    pub cost: f64,
    /// Dual potentials certifying optimality (absent for non-optimal plans).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub row_potentials: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub col_potentials: Option<Vec<f64>>,
    /// Simplex pivots used by the solver (0 for constructed plans).
    #[serde(default)]
    pub pivots: usize,
}

impl TransportPlan {
    pub fn row_sums(&self) -> Vec<f64> {
        self.plan.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let n = self.plan.first().map_or(0, Vec::len);
        (0..n).map(|j| self.plan.iter().map(|r| r[j]).sum()).collect()
    }

    /// Largest deviation of the plan's marginals from `a` and `b`.
    pub fn marginal_error(&self, a: &[f64], b: &[f64]) -> f64 {
        let rows = self.row_sums();
        let cols = self.col_sums();
        if rows.len() != a.len() || cols.len() != b.len() {
            return f64::INFINITY;
        }
        rows.iter()
            .zip(a)
            .chain(cols.iter().zip(b))
            .fold(0.0_f64, |e, (x, y)| e.max((x - y).abs()))
    }
}

fn check_exponent(p: f64) -> Result<()> {
    if p.is_finite() && p >= 1.0 {
        Ok(())
    } else {
        Err(Error::input(format!("Wasserstein exponent must lie in [1, inf), got {p}")))
    }
}

fn cost_matrix(space: &Space, xs: &[Point], ys: &[Point], p: f64) -> Result<Vec<f64>> {
    let mut cost = Vec::with_capacity(xs.len() * ys.len());
    for x in xs {
        for y in ys {
            cost.push(space.dist(x, y)?.powf(p));
        }
    }
    Ok(cost)
}

/// Exact `p`-Wasserstein distance and an optimal plan.
pub fn wasserstein(p: f64, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<(f64, TransportPlan)> {
    check_exponent(p)?;
    if mu.space() != nu.space() {
        return Err(Error::input(format!(
            "measures live on different spaces ({} vs {})",
            mu.space().name(),
            nu.space().name()
        )));
    }
    if mu.len() > MAX_TRANSPORT_ATOMS || nu.len() > MAX_TRANSPORT_ATOMS {
        return Err(Error::capacity(format!(
            "transport supports are limited to {MAX_TRANSPORT_ATOMS} atoms (got {} and {})",
            mu.len(),
            nu.len()
        )));
    }
    let cost = cost_matrix(mu.space(), mu.points(), nu.points(), p)?;
    let sol = transport::solve(mu.weights(), nu.weights(), &cost)?;
    let n = nu.len();
    let plan = TransportPlan {
        p,
        plan: sol.flow.chunks(n).map(<[f64]>::to_vec).collect(),
        cost: sol.cost,
        row_potentials: Some(sol.row_potentials),
        col_potentials: Some(sol.col_potentials),
        pivots: sol.pivots,
    };
    Ok((sol.cost.max(0.0).powf(1.0 / p), plan))
}

fn check_probability_vector(v: &[f64], name: &str) -> Result<()> {
    if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::input(format!("{name} has negative or non-finite entries")));
    }
    let total: f64 = v.iter().sum();
    if (total - 1.0).abs() > MASS_TOL {
        return Err(Error::input(format!("{name} sums to {total}, not 1")));
    }
    Ok(())
}

/// Diameter bound `Δ (½ Σ|α_i - β_i|)^{1/p}` for two measures on a common
/// finite support, with the explicit coupling that keeps the common mass
/// `min(α_i, β_i)` in place and spreads the excess proportionally.
pub fn same_support_bound(
    p: f64,
    space: &Space,
    points: &[Point],
    alpha: &[f64],
    beta: &[f64],
) -> Result<(f64, TransportPlan)> {
    check_exponent(p)?;
    let k = points.len();
    if alpha.len() != k || beta.len() != k || k == 0 {
        return Err(Error::input(format!(
            "same-support bound needs equal lengths (points {k}, alpha {}, beta {})",
            alpha.len(),
            beta.len()
        )));
    }
    check_probability_vector(alpha, "alpha")?;
    check_probability_vector(beta, "beta")?;
    let diam = space.diameter(points)?;
    let half_l1 = 0.5 * alpha.iter().zip(beta).map(|(a, b)| (a - b).abs()).sum::<f64>();
    let bound = diam * half_l1.powf(1.0 / p);

    let common: Vec<f64> = alpha.iter().zip(beta).map(|(a, b)| a.min(*b)).collect();
    let excess_a: Vec<f64> = alpha.iter().zip(&common).map(|(a, g)| a - g).collect();
    let excess_b: Vec<f64> = beta.iter().zip(&common).map(|(b, g)| b - g).collect();
    let excess_total: f64 = excess_b.iter().sum();
    let mut plan = vec![vec![0.0; k]; k];
    for i in 0..k {
        plan[i][i] = common[i];
    }
    if excess_total > 0.0 {
        for i in (0..k).filter(|&i| excess_a[i] > 0.0) {
            for j in (0..k).filter(|&j| excess_b[j] > 0.0) {
                plan[i][j] = excess_a[i] * excess_b[j] / excess_total;
            }
        }
    }
    let mut cost = 0.0;
    for i in 0..k {
        for j in 0..k {
            if plan[i][j] > 0.0 && i != j {
                cost += plan[i][j] * space.dist(&points[i], &points[j])?.powf(p);
            }
        }
    }
    Ok((
        bound,
        TransportPlan {
            p,
            plan,
            cost,
            row_potentials: None,
            col_potentials: None,
            pivots: 0,
        },
    ))
}

/// `x #_t μ`: the push-forward of `μ` under `a ↦ x #_t a`.
pub fn geodesic_pushforward(x: &Point, t: f64, mu: &DiscreteMeasure) -> Result<DiscreteMeasure> {
    let space = *mu.space();
    space.contains(x)?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::input(format!("geodesic parameter {t} outside [0, 1]")));
    }
    mu.pushforward(space, |a| space.geodesic(x, a, t))
}
