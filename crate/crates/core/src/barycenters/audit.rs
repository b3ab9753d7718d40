//! Randomized audits of `d(β(μ), β(ν)) ≤ W_p(μ, ν)` and of monotonicity in
//! the stochastic order.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{BarycentricMap, ESH_MAX_DENOMINATOR};
use crate::error::{Error, Result};
use crate::geometry::sample::{random_orthogonal, random_point, random_weights};
use crate::geometry::{loewner_leq, Point, Space, SymEig};
use crate::measures::{wasserstein, DiscreteMeasure};
use crate::rng;

/// Largest tolerated violation for an audit to pass.
pub const AUDIT_THRESHOLD: f64 = 1e-8;

const MAX_ATOMS: usize = 6;

/// Slack of [`loewner_leq`] on the smallest eigenvalue of the difference.
const LOEWNER_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub trial: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditWitness {
    pub mu: DiscreteMeasure,
    pub nu: DiscreteMeasure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub name: String,
    pub trials: usize,
    /// Largest observed violation (`d(β(μ),β(ν)) - W_p(μ,ν)` for contractivity,
    /// `-λ_min(β(ν) - β(μ))` for monotonicity).
    pub max_violation: f64,
    pub worst_trial: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worst_witness: Option<AuditWitness>,
    pub threshold: f64,
    pub failures: Vec<TrialFailure>,
    pub pass: bool,
}

pub(crate) struct TrialOutcome {
    pub violation: f64,
    pub ok: bool,
    pub witness: Option<AuditWitness>,
}

pub(crate) fn summarize(name: String, threshold: f64, outcomes: Vec<Result<TrialOutcome>>) -> AuditReport {
    let trials = outcomes.len();
    let mut max_violation = f64::NEG_INFINITY;
    let mut worst = None;
    let mut failures = Vec::new();
    let mut all_ok = true;
    for (trial, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(o) => {
                all_ok &= o.ok;
                if o.violation > max_violation {
                    max_violation = o.violation;
                    worst = Some((trial, o.witness));
                }
            }
            Err(e) => failures.push(TrialFailure {
                trial,
                error: e.to_string(),
            }),
        }
    }
    let (worst_trial, worst_witness) = match worst {
        Some((k, w)) => (Some(k), w),
        None => (None, None),
    };
    AuditReport {
        name,
        trials,
        max_violation,
        worst_trial,
        worst_witness,
        threshold,
        pass: failures.is_empty() && all_ok && max_violation <= threshold,
        failures,
    }
}

fn needs_uniform(beta: &BarycentricMap) -> bool {
    match beta {
        BarycentricMap::EsSahibHeinich { .. } => true,
        BarycentricMap::SemiflowImage { inner, .. } => needs_uniform(inner),
        BarycentricMap::GeodesicCombination { left, right, .. } => needs_uniform(left) || needs_uniform(right),
        _ => false,
    }
}

fn random_measure(space: &Space, uniform: bool, rng: &mut ChaCha8Rng) -> Result<DiscreteMeasure> {
    let k = rng.random_range(1..=MAX_ATOMS);
    let points: Vec<Point> = (0..k).map(|_| random_point(space, rng)).collect();
    if uniform {
        DiscreteMeasure::uniform(*space, points)
    } else {
        let weights = random_weights(k, rng);
        DiscreteMeasure::normalized(*space, points.into_iter().zip(weights).collect())
    }
}

fn check_supported(beta: &BarycentricMap, space: &Space, p: f64) -> Result<()> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::input(format!("exponent must lie in [1, inf), got {p}")));
    }
    if !beta.supports(space) {
        return Err(Error::unsupported(format!(
            "{} is not defined on {}",
            beta.name(),
            space.name()
        )));
    }
    Ok(())
}

/// Contractivity audit on `trials` seeded random pairs with at most six atoms
/// each. Trial `k` draws from the stream `(seed, k)`.
pub fn contractivity_audit(
    beta: &BarycentricMap,
    p: f64,
    space: &Space,
    trials: usize,
    seed: u64,
) -> Result<AuditReport> {
    let uniform = needs_uniform(beta);
    contractivity_audit_with(beta, p, space, trials, seed, |rng| {
        Ok((random_measure(space, uniform, rng)?, random_measure(space, uniform, rng)?))
    })
}

/// Contractivity audit with a caller-supplied pair generator.
pub fn contractivity_audit_with<G>(
    beta: &BarycentricMap,
    p: f64,
    space: &Space,
    trials: usize,
    seed: u64,
    generate: G,
) -> Result<AuditReport>
where
    G: Fn(&mut ChaCha8Rng) -> Result<(DiscreteMeasure, DiscreteMeasure)> + Sync,
{
    check_supported(beta, space, p)?;
    let outcomes: Vec<Result<TrialOutcome>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = rng::stream(seed, trial as u64);
            let (mu, nu) = generate(&mut rng)?;
            let a = beta.evaluate(&mu)?;
            let b = beta.evaluate(&nu)?;
            let lhs = space.dist(&a, &b)?;
            let (w, _) = wasserstein(p, &mu, &nu)?;
            let violation = lhs - w;
            Ok(TrialOutcome {
                violation,
                ok: violation <= AUDIT_THRESHOLD,
                witness: Some(AuditWitness { mu, nu }),
            })
        })
        .collect();
    Ok(summarize(
        format!("contractivity of {} on {} (p = {p})", beta.name(), space.name()),
        AUDIT_THRESHOLD,
        outcomes,
    ))
}

/// Random positive semidefinite increment with eigenvalues in `[0.05, 1]`.
pub(crate) fn psd_increment(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let q = random_orthogonal(n, rng);
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |_, _| rng.random_range(0.05..=1.0)));
    let m = &q * d * q.transpose();
    (&m + m.transpose()) * 0.5
}

/// Monotonicity audit: `μ = uniform(a_j)`, `ν = uniform(a_j + P_j)` with
/// `P_j ≥ 0`, so `μ ≤ ν`; checks `β(μ) ≤ β(ν)` in the Löwner order.
pub fn monotonicity_audit(beta: &BarycentricMap, space: &Space, trials: usize, seed: u64) -> Result<AuditReport> {
    check_supported(beta, space, 1.0)?;
    if !space.is_spd() {
        return Err(Error::unsupported(format!(
            "monotonicity audit needs an ordered SPD space, not {}",
            space.name()
        )));
    }
    let n = space.dim();
    let outcomes: Vec<Result<TrialOutcome>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = rng::stream(seed, trial as u64);
            let k = rng.random_range(1..=MAX_ATOMS.min(ESH_MAX_DENOMINATOR));
            let mut lower = Vec::with_capacity(k);
            let mut upper = Vec::with_capacity(k);
            for _ in 0..k {
                let a = random_point(space, &mut rng);
                let b = Point::spd(a.as_matrix().expect("spd point") + psd_increment(n, &mut rng))?;
                lower.push(a);
                upper.push(b);
            }
            let mu = DiscreteMeasure::uniform(*space, lower)?;
            let nu = DiscreteMeasure::uniform(*space, upper)?;
            let x = beta.evaluate(&mu)?;
            let y = beta.evaluate(&nu)?;
            let gap = y.as_matrix().expect("spd value") - x.as_matrix().expect("spd value");
            let violation = -SymEig::new(&gap)?.min();
            let ok = loewner_leq(&x, &y)?;
            Ok(TrialOutcome {
                violation,
                ok,
                witness: Some(AuditWitness { mu, nu }),
            })
        })
        .collect();
    Ok(summarize(
        format!("monotonicity of {} on {}", beta.name(), space.name()),
        LOEWNER_TOL,
        outcomes,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_small_audit_passes() {
        let e = Space::euclidean(2).unwrap();
        let r = contractivity_audit(&BarycentricMap::Arithmetic, 1.0, &e, 40, 7).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.trials, 40);
    }

    #[test]
    fn identical_pairs_have_zero_violation() {
        let e = Space::euclidean(1).unwrap();
        let r = contractivity_audit_with(&BarycentricMap::Arithmetic, 2.0, &e, 10, 1, |rng| {
            let m = random_measure(&e, false, rng)?;
            Ok((m.clone(), m))
        })
        .unwrap();
        assert_eq!(r.max_violation, 0.0);
    }

    #[test]
    fn karcher_is_monotone_on_samples() {
        let s = Space::spd_trace(2).unwrap();
        let r = monotonicity_audit(&BarycentricMap::karcher(), &s, 20, 3).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn audits_are_reproducible() {
        let s = Space::spd_thompson(2).unwrap();
        let a = contractivity_audit(&BarycentricMap::karcher(), 1.0, &s, 8, 11).unwrap();
        let b = contractivity_audit(&BarycentricMap::karcher(), 1.0, &s, 8, 11).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
