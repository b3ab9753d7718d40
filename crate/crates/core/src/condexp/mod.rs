//! Finite probability spaces, partitions, disintegration and
//! `β`-conditional expectations.

mod sturm;
mod types;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use sturm::sturm_conditional_expectation;
pub use types::{lp_distance_rv, FiniteProbabilitySpace, Partition, RandomVariable};

use crate::barycenters::BarycentricMap;
use crate::error::{Error, Result};
use crate::geometry::Point;

/// Largest `Ω` accepted by the exhaustive [`separation_test`].
pub const MAX_SEPARATION_ATOMS: usize = 20;

/// Conditional law `P_ω` on the block of `ω`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalLaw {
    pub law: FiniteProbabilitySpace,
    /// Set on zero-mass blocks, whose law is an arbitrary uniform choice.
    pub flagged: bool,
}

fn block_law(prob: &FiniteProbabilitySpace, block: &[usize]) -> Result<ConditionalLaw> {
    let mass = prob.mass(block);
    let mut w = vec![0.0; prob.len()];
    let flagged = mass <= 0.0;
    for &k in block {
        w[k] = if flagged {
            1.0 / block.len() as f64
        } else {
            prob.weight(k) / mass
        };
    }
    Ok(ConditionalLaw {
        law: FiniteProbabilitySpace::new(w)?,
        flagged,
    })
}

fn check_partition(prob: &FiniteProbabilitySpace, b: &Partition) -> Result<()> {
    if b.len() != prob.len() {
        return Err(Error::input(format!(
            "partition covers {} atoms but the probability space has {}",
            b.len(),
            prob.len()
        )));
    }
    Ok(())
}

/// `P_ω(A) = P(A ∩ B(ω)) / P(B(ω))`, one law per `ω`.
pub fn disintegrate(prob: &FiniteProbabilitySpace, b: &Partition) -> Result<Vec<ConditionalLaw>> {
    check_partition(prob, b)?;
    let per_block: Vec<ConditionalLaw> = b
        .blocks()
        .iter()
        .map(|block| block_law(prob, block))
        .collect::<Result<_>>()?;
    Ok((0..prob.len()).map(|w| per_block[b.block_of(w)].clone()).collect())
}

/// `E^β(φ) = β(φ_*P)`.
pub fn beta_expectation(beta: &BarycentricMap, phi: &RandomVariable, prob: &FiniteProbabilitySpace) -> Result<Point> {
    beta.evaluate(&phi.law(prob)?)
}

/// `β`-expectation of `φ|_A` under `P(· | A)`.
pub fn beta_expectation_restricted(
    beta: &BarycentricMap,
    phi: &RandomVariable,
    prob: &FiniteProbabilitySpace,
    subset: &[usize],
) -> Result<Point> {
    beta.evaluate(&phi.restricted_law(prob, subset)?)
}

/// `E_B^β(φ)(ω) = β(φ_*P_ω)`, evaluated once per block.
pub fn beta_conditional_expectation(
    beta: &BarycentricMap,
    phi: &RandomVariable,
    prob: &FiniteProbabilitySpace,
    b: &Partition,
) -> Result<RandomVariable> {
    check_partition(prob, b)?;
    phi.check_against(prob)?;
    let values: Vec<Point> = b
        .blocks()
        .par_iter()
        .map(|block| {
            if prob.mass(block) > 0.0 {
                beta_expectation_restricted(beta, phi, prob, block)
            } else {
                let law = block_law(prob, block)?.law;
                beta.evaluate(&phi.restricted_law(&law, block)?)
            }
        })
        .collect::<Result<_>>()?;
    RandomVariable::new(
        *phi.space(),
        (0..prob.len()).map(|w| values[b.block_of(w)].clone()).collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociativityProbe {
    /// `bd_p(E_C(E_B(φ)), E_C(φ))`.
    pub gap: f64,
    /// Atom with the largest pointwise discrepancy.
    pub witness: Option<usize>,
}

/// Measures the failure of the tower law `E_C ∘ E_B = E_C` for `C ⊆ B`.
pub fn associativity_probe(
    beta: &BarycentricMap,
    phi: &RandomVariable,
    prob: &FiniteProbabilitySpace,
    coarse: &Partition,
    fine: &Partition,
    p: f64,
) -> Result<AssociativityProbe> {
    if !fine.refines(coarse) {
        return Err(Error::input("associativity probe needs the coarse partition inside the fine one"));
    }
    let inner = beta_conditional_expectation(beta, phi, prob, fine)?;
    let lhs = beta_conditional_expectation(beta, &inner, prob, coarse)?;
    let rhs = beta_conditional_expectation(beta, phi, prob, coarse)?;
    let gap = lp_distance_rv(p, &lhs, &rhs, prob)?;
    let space = phi.space();
    let mut witness = None;
    let mut worst = 0.0;
    for w in 0..prob.len() {
        if prob.weight(w) > 0.0 {
            let d = space.dist(lhs.value(w), rhs.value(w))?;
            if d > worst {
                worst = d;
                witness = Some(w);
            }
        }
    }
    Ok(AssociativityProbe { gap, witness })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Separation {
    pub equal: bool,
    /// A set `A` with `P(A) > 0` on which the restricted expectations differ.
    pub witness: Option<Vec<usize>>,
    pub gap: f64,
}

/// Next bit mask with the same popcount (Gosper's hack).
fn next_same_popcount(x: u32) -> u32 {
    let c = x & x.wrapping_neg();
    let r = x + c;
    (((r ^ x) >> 2) / c) | r
}

/// Exhaustive scan of nonempty `A ⊆ Ω` (by size, then by bit mask) for a set
/// with `d(E^β(φ|_A), E^β(ψ|_A)) > tol`.
pub fn separation_test(
    beta: &BarycentricMap,
    phi: &RandomVariable,
    psi: &RandomVariable,
    prob: &FiniteProbabilitySpace,
    tol: f64,
) -> Result<Separation> {
    phi.check_against(prob)?;
    psi.check_against(prob)?;
    if phi.space() != psi.space() {
        return Err(Error::input("random variables take values in different spaces"));
    }
    let n = prob.len();
    if n > MAX_SEPARATION_ATOMS {
        return Err(Error::capacity(format!(
            "separation test enumerates subsets of at most {MAX_SEPARATION_ATOMS} atoms, got {n}"
        )));
    }
    let limit = 1u32 << n;
    for size in 1..=n {
        let mut mask: u32 = (1u32 << size) - 1;
        while mask < limit {
            let subset: Vec<usize> = (0..n).filter(|k| mask >> k & 1 == 1).collect();
            if prob.mass(&subset) > 0.0 {
                let a = beta_expectation_restricted(beta, phi, prob, &subset)?;
                let b = beta_expectation_restricted(beta, psi, prob, &subset)?;
                let gap = phi.space().dist(&a, &b)?;
                if gap > tol {
                    return Ok(Separation {
                        equal: false,
                        witness: Some(subset),
                        gap,
                    });
                }
            }
            if size == n {
                break;
            }
            mask = next_same_popcount(mask);
        }
    }
    Ok(Separation {
        equal: true,
        witness: None,
        gap: 0.0,
    })
}
