//! Filtrations of partitions, regular `β`-martingales `E_{B_k}^β(φ)` and
//! filtered `β`-conditional expectations.
//!
//! Filtrations are finite lists. On a finite space refinement stabilizes,
//! so the limits in the convergence theorems are attained at the last level.

use serde::{Deserialize, Serialize};

use crate::barycenters::BarycentricMap;
use crate::condexp::{beta_conditional_expectation, lp_distance_rv, FiniteProbabilitySpace, Partition, RandomVariable};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Increasing,
    Decreasing,
}

/// `B_1 ⊂ B_2 ⊂ … ⊂ B_m` or `B_1 ⊃ B_2 ⊃ … ⊃ B_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FiltrationRepr", into = "FiltrationRepr")]
pub struct Filtration {
    direction: Direction,
    levels: Vec<Partition>,
}

#[derive(Serialize, Deserialize)]
struct FiltrationRepr {
    direction: Direction,
    levels: Vec<Partition>,
}

impl TryFrom<FiltrationRepr> for Filtration {
    type Error = Error;
    fn try_from(r: FiltrationRepr) -> Result<Self> {
        Filtration::new(r.direction, r.levels)
    }
}

impl From<Filtration> for FiltrationRepr {
    fn from(f: Filtration) -> Self {
        FiltrationRepr {
            direction: f.direction,
            levels: f.levels,
        }
    }
}

impl Filtration {
    pub fn new(direction: Direction, levels: Vec<Partition>) -> Result<Self> {
        let Some(first) = levels.first() else {
            return Err(Error::input("filtration needs at least one level"));
        };
        let n = first.len();
        for (k, pair) in levels.windows(2).enumerate() {
            if pair[1].len() != n {
                return Err(Error::input(format!("level {} has a different ground set", k + 1)));
            }
            let ok = match direction {
                Direction::Increasing => pair[1].refines(&pair[0]),
                Direction::Decreasing => pair[0].refines(&pair[1]),
            };
            if !ok {
                return Err(Error::input(format!(
                    "levels {k} and {} are not nested in the {direction:?} direction",
                    k + 1
                )));
            }
        }
        Ok(Filtration { direction, levels })
    }

    /// Dyadic filtration on `2^depth` atoms: level `k` splits `Ω` into `2^k`
    /// contiguous blocks, `k = 0..=depth` (reversed when decreasing).
    pub fn dyadic(depth: u32, direction: Direction) -> Result<Self> {
        let n = 1usize << depth;
        let mut levels: Vec<Partition> = (0..=depth)
            .map(|k| Partition::from_ids(&(0..n).map(|w| w >> (depth - k)).collect::<Vec<_>>()))
            .collect::<Result<_>>()?;
        if direction == Direction::Decreasing {
            levels.reverse();
        }
        Self::new(direction, levels)
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn levels(&self) -> &[Partition] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// `B_∞`: the finest level of an increasing filtration, the coarsest of a
    /// decreasing one. Either way it is the last listed level.
    pub fn limit(&self) -> &Partition {
        self.levels.last().expect("nonempty filtration")
    }

    fn check_size(&self, prob: &FiniteProbabilitySpace) -> Result<()> {
        if self.levels[0].len() != prob.len() {
            return Err(Error::input(format!(
                "filtration acts on {} atoms but the probability space has {}",
                self.levels[0].len(),
                prob.len()
            )));
        }
        Ok(())
    }
}

/// `k ↦ E_{B_k}^β(φ)`.
pub fn regular_martingale(
    beta: &BarycentricMap,
    phi: &RandomVariable,
    prob: &FiniteProbabilitySpace,
    filtration: &Filtration,
) -> Result<Vec<RandomVariable>> {
    filtration.check_size(prob)?;
    filtration
        .levels
        .iter()
        .map(|b| beta_conditional_expectation(beta, phi, prob, b))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleConvergence {
    /// `s_k = bd_p(E_{B_k}(φ), E_{B_∞}(φ))`.
    pub series: Vec<f64>,
    /// `per_omega[k][ω] = d(E_{B_k}(φ)(ω), E_{B_∞}(φ)(ω))`.
    pub per_omega: Vec<Vec<f64>>,
    /// Whether `s_k` is non-increasing (reported, not a theorem).
    pub monotone: bool,
    /// Whether `s_m = 0` exactly.
    pub terminal_exact: bool,
}

pub fn martingale_convergence_report(
    beta: &BarycentricMap,
    phi: &RandomVariable,
    prob: &FiniteProbabilitySpace,
    filtration: &Filtration,
    p: f64,
) -> Result<MartingaleConvergence> {
    let entries = regular_martingale(beta, phi, prob, filtration)?;
    let limit = entries.last().expect("nonempty filtration");
    let space = phi.space();
    let mut series = Vec::with_capacity(entries.len());
    let mut per_omega = Vec::with_capacity(entries.len());
    for e in &entries {
        series.push(lp_distance_rv(p, e, limit, prob)?);
        per_omega.push(
            (0..prob.len())
                .map(|w| space.dist(e.value(w), limit.value(w)))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    Ok(MartingaleConvergence {
        monotone: series.windows(2).all(|w| w[1] <= w[0]),
        terminal_exact: series.last() == Some(&0.0),
        series,
        per_omega,
    })
}

fn require_increasing(filtration: &Filtration) -> Result<()> {
    if filtration.direction != Direction::Increasing {
        return Err(Error::input(
            "filtered conditional expectations are defined for increasing filtrations only",
        ));
    }
    Ok(())
}

/// `E^β[φ ‖ (B_n)_{n≥k}] = E_{B_k} ∘ E_{B_{k+1}} ∘ … ∘ E_{B_m}(φ)` (0-based `k`).
pub fn filtered_conditional_expectation(
    beta: &BarycentricMap,
    phi: &RandomVariable,
    prob: &FiniteProbabilitySpace,
    filtration: &Filtration,
    k: usize,
) -> Result<RandomVariable> {
    require_increasing(filtration)?;
    filtration.check_size(prob)?;
    if k >= filtration.len() {
        return Err(Error::input(format!(
            "level {k} out of range for a filtration of length {}",
            filtration.len()
        )));
    }
    let mut current = phi.clone();
    for b in filtration.levels[k..].iter().rev() {
        current = beta_conditional_expectation(beta, &current, prob, b)?;
    }
    Ok(current)
}

/// All filtered conditional expectations `φ_k`, `k = 0..m`, sharing the
/// inner compositions.
pub fn filtered_sequence(
    beta: &BarycentricMap,
    phi: &RandomVariable,
    prob: &FiniteProbabilitySpace,
    filtration: &Filtration,
) -> Result<Vec<RandomVariable>> {
    require_increasing(filtration)?;
    filtration.check_size(prob)?;
    let mut out = Vec::with_capacity(filtration.len());
    let mut current = phi.clone();
    for b in filtration.levels.iter().rev() {
        current = beta_conditional_expectation(beta, &current, prob, b)?;
        out.push(current.clone());
    }
    out.reverse();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilteredMartingaleCheck {
    pub holds: bool,
    /// Largest pointwise gap over positive-mass atoms.
    pub max_gap: f64,
    /// Index `k` of the worst identity `E[φ_{k+1} ‖ (B_n)_{n≥k}] = φ_k`.
    pub worst_index: Option<usize>,
}

fn max_pointwise_gap(a: &RandomVariable, b: &RandomVariable, prob: &FiniteProbabilitySpace) -> Result<f64> {
    let mut worst = 0.0_f64;
    for w in 0..prob.len() {
        if prob.weight(w) > 0.0 {
            worst = worst.max(a.space().dist(a.value(w), b.value(w))?);
        }
    }
    Ok(worst)
}

fn check_sequence(sequence: &[RandomVariable], prob: &FiniteProbabilitySpace, filtration: &Filtration) -> Result<()> {
    if sequence.len() != filtration.len() {
        return Err(Error::input(format!(
            "sequence has {} entries but the filtration has {} levels",
            sequence.len(),
            filtration.len()
        )));
    }
    for (k, (phi, b)) in sequence.iter().zip(&filtration.levels).enumerate() {
        phi.check_against(prob)?;
        if !b.measures(phi) {
            return Err(Error::input(format!("entry {k} is not measurable for level {k}")));
        }
    }
    Ok(())
}

/// Checks `E^β[φ_{k+1} ‖ (B_n)_{n≥k}] = φ_k` for every consecutive pair.
pub fn is_filtered_martingale(
    beta: &BarycentricMap,
    sequence: &[RandomVariable],
    prob: &FiniteProbabilitySpace,
    filtration: &Filtration,
    tol: f64,
) -> Result<FilteredMartingaleCheck> {
    require_increasing(filtration)?;
    filtration.check_size(prob)?;
    check_sequence(sequence, prob, filtration)?;
    let mut max_gap = 0.0;
    let mut worst_index = None;
    for k in 0..sequence.len().saturating_sub(1) {
        let e = filtered_conditional_expectation(beta, &sequence[k + 1], prob, filtration, k)?;
        let gap = max_pointwise_gap(&e, &sequence[k], prob)?;
        if gap > max_gap {
            max_gap = gap;
            worst_index = Some(k);
        }
    }
    Ok(FilteredMartingaleCheck {
        holds: max_gap <= tol,
        max_gap,
        worst_index,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilteredLimitCheck {
    /// Largest pointwise gap between the sequence and the filtered
    /// expectations of its last element.
    pub reproduction_gap: f64,
    /// `bd_p(φ_k, φ_last)`.
    pub series: Vec<f64>,
    pub pass: bool,
}

/// Taking `φ = φ_last`, checks that `E^β[φ ‖ (B_n)_{n≥k}]` reproduces `φ_k`.
pub fn filtered_martingale_limit_check(
    beta: &BarycentricMap,
    sequence: &[RandomVariable],
    prob: &FiniteProbabilitySpace,
    filtration: &Filtration,
    p: f64,
    tol: f64,
) -> Result<FilteredLimitCheck> {
    require_increasing(filtration)?;
    check_sequence(sequence, prob, filtration)?;
    let last = sequence.last().expect("nonempty sequence");
    let rebuilt = filtered_sequence(beta, last, prob, filtration)?;
    let mut reproduction_gap = 0.0_f64;
    for (a, b) in rebuilt.iter().zip(sequence) {
        reproduction_gap = reproduction_gap.max(max_pointwise_gap(a, b, prob)?);
    }
    let series = sequence
        .iter()
        .map(|phi| lp_distance_rv(p, phi, last, prob))
        .collect::<Result<Vec<_>>>()?;
    Ok(FilteredLimitCheck {
        pass: reproduction_gap <= tol,
        reproduction_gap,
        series,
    })
}
