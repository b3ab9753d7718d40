//! Permutation dynamics on finite spaces: trajectory empirical measures and
//! the ergodic limit `Γ(φ) = E_I^β(φ)` over the invariant partition.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::barycenters::audit::{psd_increment, summarize, TrialOutcome};
use crate::barycenters::{AuditReport, BarycentricMap};
use crate::condexp::{beta_conditional_expectation, lp_distance_rv, FiniteProbabilitySpace, Partition, RandomVariable};
use crate::error::{Error, Result};
use crate::geometry::sample::random_point;
use crate::geometry::{loewner_leq, Point, Space};
use crate::measures::DiscreteMeasure;
use crate::rng;

/// Pointwise tolerance for `β(μ_n) = Γ(φ)` at multiples of the orbit length.
pub const CYCLE_TOL: f64 = 1e-9;

/// Slack allowed in the `Γ` audits.
pub const GAMMA_AUDIT_SLACK: f64 = 1e-9;

/// A measure-preserving permutation `T` of `Ω`.
/// Serializes as its permutation array; deserialize the array and call
/// [`Transformation::new`] with the probability space.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(into = "Vec<usize>")]
pub struct Transformation {
    permutation: Vec<usize>,
    orbits: Vec<Vec<usize>>,
    orbit_of: Vec<usize>,
    invariant: Partition,
    ergodic: bool,
}

impl From<Transformation> for Vec<usize> {
    fn from(t: Transformation) -> Self {
        t.permutation
    }
}

impl Transformation {
    /// Validates that `permutation` is a bijection preserving `P`.
    pub fn new(permutation: Vec<usize>, prob: &FiniteProbabilitySpace) -> Result<Self> {
        let n = permutation.len();
        if n != prob.len() {
            return Err(Error::input(format!(
                "permutation of {n} atoms on a space of {}",
                prob.len()
            )));
        }
        let mut hit = vec![false; n];
        for &s in &permutation {
            if s >= n || hit[s] {
                return Err(Error::input("transformation is not a permutation"));
            }
            hit[s] = true;
        }
        for (w, &s) in permutation.iter().enumerate() {
            if prob.weight(w) != prob.weight(s) {
                return Err(Error::domain(format!(
                    "T does not preserve P: P({w}) = {} but P(T({w})) = {}",
                    prob.weight(w),
                    prob.weight(s)
                )));
            }
        }
        let mut orbit_of = vec![usize::MAX; n];
        let mut orbits = Vec::new();
        for start in 0..n {
            if orbit_of[start] != usize::MAX {
                continue;
            }
            let mut orbit = Vec::new();
            let mut w = start;
            while orbit_of[w] == usize::MAX {
                orbit_of[w] = orbits.len();
                orbit.push(w);
                w = permutation[w];
            }
            orbits.push(orbit);
        }
        let invariant = Partition::from_ids(&orbit_of)?;
        let charged: Vec<usize> = (0..n).filter(|&w| prob.weight(w) > 0.0).map(|w| orbit_of[w]).collect();
        let ergodic = charged.windows(2).all(|p| p[0] == p[1]);
        Ok(Transformation {
            permutation,
            orbits,
            orbit_of,
            invariant,
            ergodic,
        })
    }

    pub fn identity(prob: &FiniteProbabilitySpace) -> Result<Self> {
        Self::new((0..prob.len()).collect(), prob)
    }

    /// The cycle `ω ↦ ω + 1 mod n`.
    pub fn cycle(prob: &FiniteProbabilitySpace) -> Result<Self> {
        let n = prob.len();
        Self::new((0..n).map(|w| (w + 1) % n).collect(), prob)
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn apply(&self, omega: usize) -> usize {
        self.permutation[omega]
    }

    pub fn orbits(&self) -> &[Vec<usize>] {
        &self.orbits
    }

    pub fn orbit_length(&self, omega: usize) -> usize {
        self.orbits[self.orbit_of[omega]].len()
    }

    /// The `T`-invariant sub-σ-algebra `I`, generated by the orbits.
    pub fn invariant_partition(&self) -> &Partition {
        &self.invariant
    }

    /// Whether the positive-mass atoms form a single orbit.
    pub fn is_ergodic(&self) -> bool {
        self.ergodic
    }
}

/// `μ_n^φ(ω) = (1/n) Σ_{k<n} δ_{φ(T^k ω)}`, repeated points merged.
pub fn trajectory_empirical_measure(
    phi: &RandomVariable,
    t: &Transformation,
    omega: usize,
    n: usize,
) -> Result<DiscreteMeasure> {
    if n == 0 {
        return Err(Error::input("empirical measure of an empty trajectory"));
    }
    if phi.len() != t.permutation.len() || omega >= phi.len() {
        return Err(Error::input("trajectory start or random variable outside Omega"));
    }
    let mut counts: Vec<(Point, usize)> = Vec::new();
    let mut w = omega;
    for _ in 0..n {
        let x = phi.value(w);
        match counts.iter_mut().find(|(p, _)| p.bitwise_eq(x)) {
            Some((_, c)) => *c += 1,
            None => counts.push((x.clone(), 1)),
        }
        w = t.apply(w);
    }
    DiscreteMeasure::new(
        *phi.space(),
        counts.into_iter().map(|(p, c)| (p, c as f64 / n as f64)).collect(),
    )
}

/// `Γ(φ) = E_I^β(φ)`, computed directly on the orbit partition.
pub fn ergodic_limit(
    beta: &BarycentricMap,
    phi: &RandomVariable,
    prob: &FiniteProbabilitySpace,
    t: &Transformation,
) -> Result<RandomVariable> {
    beta_conditional_expectation(beta, phi, prob, t.invariant_partition())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErgodicConvergence {
    /// `per_omega[ω][n-1] = d(β(μ_n^φ(ω)), Γ(φ)(ω))`.
    pub per_omega: Vec<Vec<f64>>,
    /// `bd_p(β(μ_n^φ), Γ(φ))` for `n = 1..=n_max`.
    pub aggregate: Vec<f64>,
    /// Largest distance at multiples of the orbit length (positive-mass `ω`).
    pub max_at_cycles: f64,
    pub cycles_exact: bool,
}

pub fn ergodic_convergence_report(
    beta: &BarycentricMap,
    phi: &RandomVariable,
    prob: &FiniteProbabilitySpace,
    t: &Transformation,
    p: f64,
    n_max: usize,
) -> Result<ErgodicConvergence> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::input(format!("exponent must lie in [1, inf), got {p}")));
    }
    let gamma = ergodic_limit(beta, phi, prob, t)?;
    let space = phi.space();
    let per_omega: Vec<Vec<f64>> = (0..prob.len())
        .into_par_iter()
        .map(|w| {
            (1..=n_max)
                .map(|n| {
                    let x = beta.evaluate(&trajectory_empirical_measure(phi, t, w, n)?)?;
                    space.dist(&x, gamma.value(w))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let aggregate = (0..n_max)
        .map(|k| {
            (0..prob.len())
                .map(|w| prob.weight(w) * per_omega[w][k].powf(p))
                .sum::<f64>()
                .powf(1.0 / p)
        })
        .collect();
    let mut max_at_cycles = 0.0_f64;
    for w in (0..prob.len()).filter(|&w| prob.weight(w) > 0.0) {
        let len = t.orbit_length(w);
        for n in (len..=n_max).step_by(len) {
            max_at_cycles = max_at_cycles.max(per_omega[w][n - 1]);
        }
    }
    Ok(ErgodicConvergence {
        per_omega,
        aggregate,
        max_at_cycles,
        cycles_exact: max_at_cycles <= CYCLE_TOL,
    })
}

fn random_variable(space: &Space, n: usize, rng: &mut rand_chacha::ChaCha8Rng) -> Result<RandomVariable> {
    RandomVariable::new(*space, (0..n).map(|_| random_point(space, rng)).collect())
}

/// Audits `bd_p(Γ(φ), Γ(ψ)) ≤ bd_p(φ, ψ)` on seeded random pairs.
pub fn gamma_contractivity_audit(
    beta: &BarycentricMap,
    space: &Space,
    prob: &FiniteProbabilitySpace,
    t: &Transformation,
    p: f64,
    trials: usize,
    seed: u64,
) -> Result<AuditReport> {
    if !beta.supports(space) {
        return Err(Error::unsupported(format!("{} is not defined on {}", beta.name(), space.name())));
    }
    let outcomes: Vec<Result<TrialOutcome>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = rng::stream(seed, trial as u64);
            let phi = random_variable(space, prob.len(), &mut rng)?;
            // Every fourth trial compares φ with itself.
            let psi = if rng.random_range(0..4) == 0 {
                phi.clone()
            } else {
                random_variable(space, prob.len(), &mut rng)?
            };
            let lhs = lp_distance_rv(p, &ergodic_limit(beta, &phi, prob, t)?, &ergodic_limit(beta, &psi, prob, t)?, prob)?;
            let rhs = lp_distance_rv(p, &phi, &psi, prob)?;
            let violation = lhs - rhs;
            Ok(TrialOutcome {
                violation,
                ok: violation <= GAMMA_AUDIT_SLACK,
                witness: None,
            })
        })
        .collect();
    Ok(summarize(
        format!("Gamma contractivity of {} on {} (p = {p})", beta.name(), space.name()),
        GAMMA_AUDIT_SLACK,
        outcomes,
    ))
}

/// Audits `φ ≤ ψ ⇒ Γ(φ) ≤ Γ(ψ)` pointwise, with `ψ = φ + P` for random
/// positive semidefinite increments.
pub fn gamma_monotonicity_audit(
    beta: &BarycentricMap,
    space: &Space,
    prob: &FiniteProbabilitySpace,
    t: &Transformation,
    trials: usize,
    seed: u64,
) -> Result<AuditReport> {
    if !space.is_spd() || !beta.supports(space) {
        return Err(Error::unsupported(format!(
            "monotonicity audit of {} needs an ordered SPD space, not {}",
            beta.name(),
            space.name()
        )));
    }
    let n = space.dim();
    let outcomes: Vec<Result<TrialOutcome>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = rng::stream(seed, trial as u64);
            let phi = random_variable(space, prob.len(), &mut rng)?;
            let psi = RandomVariable::new(
                *space,
                phi.values()
                    .iter()
                    .map(|x| Point::spd(x.as_matrix().expect("spd value") + psd_increment(n, &mut rng)))
                    .collect::<Result<_>>()?,
            )?;
            let a = ergodic_limit(beta, &phi, prob, t)?;
            let b = ergodic_limit(beta, &psi, prob, t)?;
            let mut violation = f64::NEG_INFINITY;
            let mut ok = true;
            for w in (0..prob.len()).filter(|&w| prob.weight(w) > 0.0) {
                let gap = b.value(w).as_matrix().expect("spd") - a.value(w).as_matrix().expect("spd");
                violation = violation.max(-gap.symmetric_eigenvalues().min());
                ok &= loewner_leq(a.value(w), b.value(w))?;
            }
            Ok(TrialOutcome {
                violation,
                ok,
                witness: None,
            })
        })
        .collect();
    Ok(summarize(
        format!("Gamma monotonicity of {} on {}", beta.name(), space.name()),
        1e-12,
        outcomes,
    ))
}

/// Per-block terms of a continuity report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockContinuity {
    pub block: usize,
    /// `d(β′(φ_*P_ω), β(φ_*P_ω))`.
    pub distance: f64,
    /// Diameter of the values of `φ` on the block.
    pub diameter: f64,
    /// `distance / diameter`: a sampled lower bound of `d(β′, β)`, never above 1.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport {
    /// `bd_p(E_{β′}(φ′), E_β(φ))` for the conditional operator in question.
    pub gap: f64,
    pub blocks: Vec<BlockContinuity>,
    /// `bd_p(φ′, φ) + (Σ_ω P(ω) (Δ_ω r_ω)^p)^{1/p}`.
    pub derived_bound: f64,
    pub ratios_capped: bool,
    pub within_bound: bool,
    pub pass: bool,
}

/// Continuity of `(β, φ) ↦ E_B^β(φ)` on one instance.
pub fn conditional_continuity_report(
    partition: &Partition,
    beta: &BarycentricMap,
    beta_prime: &BarycentricMap,
    phi: &RandomVariable,
    phi_prime: &RandomVariable,
    prob: &FiniteProbabilitySpace,
    p: f64,
) -> Result<ContinuityReport> {
    let space = phi.space();
    let base = beta_conditional_expectation(beta, phi, prob, partition)?;
    let moved = beta_conditional_expectation(beta_prime, phi_prime, prob, partition)?;
    let same_phi = beta_conditional_expectation(beta_prime, phi, prob, partition)?;
    let gap = lp_distance_rv(p, &moved, &base, prob)?;

    let mut blocks = Vec::with_capacity(partition.blocks().len());
    let mut map_term = 0.0;
    for (k, block) in partition.blocks().iter().enumerate() {
        let w0 = block[0];
        let distance = space.dist(same_phi.value(w0), base.value(w0))?;
        let values: Vec<Point> = block.iter().map(|&w| phi.value(w).clone()).collect();
        let diameter = space.diameter(&values)?;
        let ratio = if diameter > 0.0 { distance / diameter } else { 0.0 };
        map_term += prob.mass(block) * (diameter * ratio).powf(p);
        blocks.push(BlockContinuity {
            block: k,
            distance,
            diameter,
            ratio,
        });
    }
    let derived_bound = lp_distance_rv(p, phi_prime, phi, prob)? + map_term.powf(1.0 / p);
    let ratios_capped = blocks.iter().all(|b| b.ratio <= 1.0 + 1e-9);
    let within_bound = gap <= derived_bound * (1.0 + 1e-9) + 1e-12;
    Ok(ContinuityReport {
        gap,
        blocks,
        derived_bound,
        ratios_capped,
        within_bound,
        pass: ratios_capped && within_bound,
    })
}

/// Continuity of `(β, φ) ↦ Γ_β(φ)`: the conditional report on the orbits.
pub fn gamma_continuity_report(
    beta: &BarycentricMap,
    beta_prime: &BarycentricMap,
    phi: &RandomVariable,
    phi_prime: &RandomVariable,
    prob: &FiniteProbabilitySpace,
    t: &Transformation,
    p: f64,
) -> Result<ContinuityReport> {
    conditional_continuity_report(t.invariant_partition(), beta, beta_prime, phi, phi_prime, prob, p)
}
