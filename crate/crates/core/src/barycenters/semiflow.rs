//! The semiflow `Φ(t, β)(μ)`: the unique fixed point of `x ↦ β(x #_t μ)`.
//!
//! On an NPC space `x ↦ x #_t μ` shrinks `W_1` distances by `1 - t`, so the
//! map is a strict contraction and plain iteration converges geometrically.

use serde::{Deserialize, Serialize};

use super::{canonical_npc, BarycentricMap};
use crate::error::{Error, Result};
use crate::geometry::{convexity_constant, Point};
use crate::measures::{geodesic_pushforward, DiscreteMeasure};

/// Absolute slack added to the pair and limit bounds.
pub const SEMIFLOW_SLACK: f64 = 1e-8;

const EXTRA_ITERATIONS: usize = 100;

impl BarycentricMap {
    /// Upper bound on the distance between a computed value and the exact one.
    pub(crate) fn solver_tolerance(&self) -> f64 {
        match self {
            BarycentricMap::Arithmetic => 0.0,
            BarycentricMap::Karcher { tol, .. }
            | BarycentricMap::CanonicalNpc { tol, .. }
            | BarycentricMap::EsSahibHeinich { tol, .. } => *tol,
            BarycentricMap::SemiflowImage { t, inner, tol } => tol + inner.solver_tolerance() / t,
            BarycentricMap::GeodesicCombination { left, right, .. } => {
                left.solver_tolerance().max(right.solver_tolerance())
            }
        }
    }
}

/// Iterates `x_{k+1} = β(x_k #_t μ)` from `x_0 = β(μ)` until the step is at
/// most `tol·t`, which bounds the distance to the fixed point by `tol`.
pub fn semiflow_fixed_point(beta: &BarycentricMap, t: f64, mu: &DiscreteMeasure, tol: f64) -> Result<Point> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::input(format!("semiflow parameter must lie in (0, 1], got {t}")));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::input(format!("semiflow tolerance must be positive, got {tol}")));
    }
    let space = *mu.space();
    if !space.is_npc() {
        return Err(Error::unsupported(format!(
            "semiflow requires a global NPC geometry, not {}",
            space.name()
        )));
    }
    let mut x = beta.evaluate_unchecked(mu)?;
    if t == 1.0 {
        return Ok(x);
    }
    if mu.is_dirac() {
        return Ok(mu.points()[0].clone());
    }
    let diam = mu.support_diameter()?;
    let target = tol * t;
    let needed = if diam <= target {
        0.0
    } else {
        ((target / diam).ln() / (1.0 - t).ln()).ceil()
    };
    let cap = needed as usize + EXTRA_ITERATIONS;
    let mut trace = Vec::new();
    for _ in 0..cap {
        let next = beta.evaluate_unchecked(&geodesic_pushforward(&x, t, mu)?)?;
        let step = space.dist(&x, &next)?;
        x = next;
        trace.push(step);
        if step <= target {
            return Ok(x);
        }
    }
    let last = trace.last().copied().unwrap_or(f64::INFINITY);
    Err(Error::convergence(
        format!("semiflow fixed point at t = {t}"),
        cap,
        last,
        trace,
        Some(x),
    ))
}

/// One `(s, t, μ)` case of [`semiflow_audit`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemiflowSample {
    pub s: f64,
    pub t: f64,
    /// `d(Φ(t, Φ(s, β))(μ), Φ(st, β)(μ))`.
    pub law_gap: f64,
    pub law_tolerance: f64,
    /// `d(Φ(t, β)(μ), Φ(s, β)(μ))`.
    pub pair_distance: f64,
    /// `[(k_{2p}(s+t) + 2(2 - k_{2p}))/4]^{1/(2p)} Δ(supp μ) + slack`.
    pub pair_bound: f64,
    pub law_ok: bool,
    pub pair_ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemiflowAudit {
    pub p: f64,
    pub samples: Vec<SemiflowSample>,
    pub failures: usize,
    pub pass: bool,
}

fn audit_case(beta: &BarycentricMap, s: f64, t: f64, mu: &DiscreteMeasure, p: f64, k: f64, tol: f64) -> Result<SemiflowSample> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::input(format!("semiflow parameter s must lie in (0, 1], got {s}")));
    }
    let space = mu.space();
    let phi_s = BarycentricMap::SemiflowImage {
        t: s,
        inner: Box::new(beta.clone()),
        tol,
    };
    let nested = semiflow_fixed_point(&phi_s, t, mu, tol)?;
    let direct = semiflow_fixed_point(beta, s * t, mu, tol)?;
    let law_gap = space.dist(&nested, &direct)?;
    let beta_err = beta.solver_tolerance();
    let law_tolerance = 2.0 * tol + tol / t + 2.0 * beta_err / (s * t) + 1e-12;

    let at_t = semiflow_fixed_point(beta, t, mu, tol)?;
    let at_s = semiflow_fixed_point(beta, s, mu, tol)?;
    let pair_distance = space.dist(&at_t, &at_s)?;
    let factor = ((k * (s + t) + 2.0 * (2.0 - k)) / 4.0).powf(1.0 / (2.0 * p));
    let pair_bound = factor * mu.support_diameter()? + SEMIFLOW_SLACK;
    Ok(SemiflowSample {
        s,
        t,
        law_gap,
        law_tolerance,
        pair_distance,
        pair_bound,
        law_ok: law_gap <= law_tolerance,
        pair_ok: pair_distance <= pair_bound,
        error: None,
    })
}

/// Checks the semiflow law and the uniform-convexity pair bound on each case.
pub fn semiflow_audit(
    beta: &BarycentricMap,
    cases: &[(f64, f64, DiscreteMeasure)],
    p: f64,
    tol: f64,
) -> Result<SemiflowAudit> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::input(format!("exponent must lie in [1, inf), got {p}")));
    }
    let k = convexity_constant(2.0 * p)?.k_q;
    let samples: Vec<SemiflowSample> = cases
        .iter()
        .map(|(s, t, mu)| {
            audit_case(beta, *s, *t, mu, p, k, tol).unwrap_or_else(|e| SemiflowSample {
                s: *s,
                t: *t,
                law_gap: f64::NAN,
                law_tolerance: f64::NAN,
                pair_distance: f64::NAN,
                pair_bound: f64::NAN,
                law_ok: false,
                pair_ok: false,
                error: Some(e.to_string()),
            })
        })
        .collect();
    let failures = samples.iter().filter(|c| !(c.law_ok && c.pair_ok)).count();
    Ok(SemiflowAudit {
        p,
        samples,
        failures,
        pass: failures == 0,
    })
}

/// Distances `d(Φ(t, β)(μ), λ(μ))` along a list of `t` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemiflowLimitReport {
    pub ts: Vec<f64>,
    pub distances: Vec<f64>,
    /// `√(t/2) Δ(supp μ) + slack`.
    pub bounds: Vec<f64>,
    pub within_bounds: bool,
    /// Strictly decreasing along `ts` when the list is ordered by decreasing `t`.
    pub decreasing: bool,
    pub pass: bool,
}

pub fn semiflow_limit_report(
    beta: &BarycentricMap,
    ts: &[f64],
    mu: &DiscreteMeasure,
    tol: f64,
) -> Result<SemiflowLimitReport> {
    let space = mu.space();
    let lambda = canonical_npc(mu, 1e-12, 200)?;
    let diam = mu.support_diameter()?;
    let mut distances = Vec::with_capacity(ts.len());
    let mut bounds = Vec::with_capacity(ts.len());
    for &t in ts {
        let x = semiflow_fixed_point(beta, t, mu, tol)?;
        distances.push(space.dist(&x, &lambda)?);
        bounds.push((t / 2.0).sqrt() * diam + SEMIFLOW_SLACK);
    }
    let within_bounds = distances.iter().zip(&bounds).all(|(d, b)| d <= b);
    let decreasing = distances.windows(2).all(|w| w[1] < w[0]);
    Ok(SemiflowLimitReport {
        ts: ts.to_vec(),
        distances,
        bounds,
        within_bounds,
        decreasing,
        pass: within_bounds && decreasing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Space;

    fn r(x: f64) -> Point {
        Point::scalar(x).unwrap()
    }

    #[test]
    fn arithmetic_fixed_point_is_the_mean() {
        let line = Space::euclidean(1).unwrap();
        let mu = DiscreteMeasure::new(line, vec![(r(0.0), 0.25), (r(4.0), 0.75)]).unwrap();
        for t in [1.0, 0.5, 0.1] {
            let x = semiflow_fixed_point(&BarycentricMap::Arithmetic, t, &mu, 1e-12).unwrap();
            assert!((x.as_vector().unwrap()[0] - 3.0).abs() < 1e-11);
        }
    }

    #[test]
    fn dirac_and_unit_time() {
        let s = Space::spd_trace(2).unwrap();
        let z = Point::spd_diag(&[2.0, 0.5]).unwrap();
        let dirac = DiscreteMeasure::dirac(s, z.clone()).unwrap();
        let x = semiflow_fixed_point(&BarycentricMap::karcher(), 0.3, &dirac, 1e-10).unwrap();
        assert!(x.bitwise_eq(&z));
        let mu = DiscreteMeasure::uniform(s, vec![z, Point::identity(2)]).unwrap();
        let one = semiflow_fixed_point(&BarycentricMap::karcher(), 1.0, &mu, 1e-10).unwrap();
        assert!(one.bitwise_eq(&BarycentricMap::karcher().evaluate(&mu).unwrap()));
    }

    #[test]
    fn thompson_is_rejected() {
        let s = Space::spd_thompson(2).unwrap();
        let mu = DiscreteMeasure::dirac(s, Point::identity(2)).unwrap();
        assert!(matches!(
            semiflow_fixed_point(&BarycentricMap::karcher(), 0.5, &mu, 1e-10),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn audit_on_a_small_spd_measure() {
        let s = Space::spd_trace(2).unwrap();
        let mu = DiscreteMeasure::uniform(
            s,
            vec![
                Point::spd_from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap(),
                Point::spd_diag(&[0.5, 3.0]).unwrap(),
            ],
        )
        .unwrap();
        let report = semiflow_audit(&BarycentricMap::karcher(), &[(1.0, 1.0, mu.clone()), (0.5, 0.6, mu)], 1.0, 1e-10).unwrap();
        assert!(report.pass, "{report:?}");
        assert!(report.samples[0].law_gap < 1e-12);
    }
}
