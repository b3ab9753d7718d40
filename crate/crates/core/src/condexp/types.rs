use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, Space};
use crate::measures::{DiscreteMeasure, MASS_TOL};

/// `Ω = {0, …, n-1}` with weights `P(ω)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProbabilityRepr", into = "ProbabilityRepr")]
pub struct FiniteProbabilitySpace {
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ProbabilityRepr {
    weights: Vec<f64>,
}

impl TryFrom<ProbabilityRepr> for FiniteProbabilitySpace {
    type Error = Error;
    fn try_from(r: ProbabilityRepr) -> Result<Self> {
        FiniteProbabilitySpace::new(r.weights)
    }
}

impl From<FiniteProbabilitySpace> for ProbabilityRepr {
    fn from(p: FiniteProbabilitySpace) -> Self {
        ProbabilityRepr { weights: p.weights }
    }
}

impl FiniteProbabilitySpace {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::input("probability space needs at least one atom"));
        }
        if let Some((k, w)) = weights.iter().enumerate().find(|(_, w)| !w.is_finite() || **w < 0.0) {
            return Err(Error::input(format!("P({k}) = {w} is not a probability")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::input(format!("probabilities sum to {total}, not 1")));
        }
        Ok(FiniteProbabilitySpace { weights })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::input("probability space needs at least one atom"));
        }
        Self::new(vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, omega: usize) -> f64 {
        self.weights[omega]
    }

    /// Atoms of zero mass; allowed, but values there are irrelevant a.e.
    pub fn null_atoms(&self) -> Vec<usize> {
        (0..self.len()).filter(|&k| self.weights[k] == 0.0).collect()
    }

    pub fn mass(&self, subset: &[usize]) -> f64 {
        subset.iter().map(|&k| self.weights[k]).sum()
    }
}

/// A partition of `Ω`, i.e. a sub-σ-algebra of a finite space.
/// Block ids are dense and numbered by first appearance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Partition {
    block_of: Vec<usize>,
    blocks: Vec<Vec<usize>>,
}

impl TryFrom<Vec<usize>> for Partition {
    type Error = Error;
    fn try_from(ids: Vec<usize>) -> Result<Self> {
        Partition::from_ids(&ids)
    }
}

impl From<Partition> for Vec<usize> {
    fn from(p: Partition) -> Self {
        p.block_of
    }
}

impl Partition {
    /// Builds the partition whose blocks are the level sets of `ids`.
    pub fn from_ids(ids: &[usize]) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::input("partition of an empty set"));
        }
        let mut relabel = std::collections::HashMap::new();
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        let mut block_of = Vec::with_capacity(ids.len());
        for (omega, id) in ids.iter().enumerate() {
            let b = *relabel.entry(*id).or_insert_with(|| {
                blocks.push(Vec::new());
                blocks.len() - 1
            });
            blocks[b].push(omega);
            block_of.push(b);
        }
        Ok(Partition { block_of, blocks })
    }

    pub fn trivial(n: usize) -> Result<Self> {
        Self::from_ids(&vec![0; n])
    }

    pub fn discrete(n: usize) -> Result<Self> {
        Self::from_ids(&(0..n).collect::<Vec<_>>())
    }

    pub fn len(&self) -> usize {
        self.block_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.block_of.is_empty()
    }

    pub fn block_of(&self, omega: usize) -> usize {
        self.block_of[omega]
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn ids(&self) -> &[usize] {
        &self.block_of
    }

    /// True iff every block of `self` lies inside a block of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        self.len() == coarser.len()
            && self
                .blocks
                .iter()
                .all(|b| b.iter().all(|&w| coarser.block_of(w) == coarser.block_of(b[0])))
    }

    pub fn is_discrete(&self) -> bool {
        self.blocks.len() == self.len()
    }

    pub fn is_trivial(&self) -> bool {
        self.blocks.len() == 1
    }

    /// Whether `phi` is constant (bitwise) on every block.
    pub fn measures(&self, phi: &RandomVariable) -> bool {
        phi.len() == self.len()
            && self
                .blocks
                .iter()
                .all(|b| b.iter().all(|&w| phi.values[w].bitwise_eq(&phi.values[b[0]])))
    }
}

/// An `M`-valued random variable on a finite `Ω`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RandomVariableRepr", into = "RandomVariableRepr")]
pub struct RandomVariable {
    space: Space,
    values: Vec<Point>,
}

#[derive(Serialize, Deserialize)]
struct RandomVariableRepr {
    space: Space,
    values: Vec<Point>,
}

impl TryFrom<RandomVariableRepr> for RandomVariable {
    type Error = Error;
    fn try_from(r: RandomVariableRepr) -> Result<Self> {
        RandomVariable::new(r.space, r.values)
    }
}

impl From<RandomVariable> for RandomVariableRepr {
    fn from(r: RandomVariable) -> Self {
        RandomVariableRepr {
            space: r.space,
            values: r.values,
        }
    }
}

impl RandomVariable {
    pub fn new(space: Space, values: Vec<Point>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::input("random variable on an empty space"));
        }
        for v in &values {
            space.contains(v)?;
        }
        Ok(RandomVariable { space, values })
    }

    pub fn constant(space: Space, x: Point, n: usize) -> Result<Self> {
        Self::new(space, vec![x; n])
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn values(&self) -> &[Point] {
        &self.values
    }

    pub fn value(&self, omega: usize) -> &Point {
        &self.values[omega]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub(crate) fn check_against(&self, prob: &FiniteProbabilitySpace) -> Result<()> {
        if self.len() != prob.len() {
            return Err(Error::input(format!(
                "random variable has {} values but the probability space has {} atoms",
                self.len(),
                prob.len()
            )));
        }
        Ok(())
    }

    /// The law `φ_*P`.
    pub fn law(&self, prob: &FiniteProbabilitySpace) -> Result<DiscreteMeasure> {
        self.check_against(prob)?;
        DiscreteMeasure::new(
            self.space,
            self.values.iter().cloned().zip(prob.weights().iter().copied()).collect(),
        )
    }

    /// Law of `φ` under `P(· | A)`; `A` must have positive mass.
    pub fn restricted_law(&self, prob: &FiniteProbabilitySpace, subset: &[usize]) -> Result<DiscreteMeasure> {
        self.check_against(prob)?;
        if let Some(&w) = subset.iter().find(|&&w| w >= prob.len()) {
            return Err(Error::input(format!("atom {w} outside Omega of size {}", prob.len())));
        }
        let mass = prob.mass(subset);
        if mass <= 0.0 {
            return Err(Error::domain("conditioning on a set of probability zero"));
        }
        DiscreteMeasure::normalized(
            self.space,
            subset
                .iter()
                .map(|&w| (self.values[w].clone(), prob.weight(w) / mass))
                .collect(),
        )
    }

    /// Whether `φ = ψ` at every positive-mass atom, within `tol` in the metric.
    pub fn equal_ae(&self, other: &RandomVariable, prob: &FiniteProbabilitySpace, tol: f64) -> Result<bool> {
        self.check_against(prob)?;
        other.check_against(prob)?;
        for w in 0..prob.len() {
            if prob.weight(w) > 0.0 && self.space.dist(&self.values[w], &other.values[w])? > tol {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// `(Σ_ω P(ω) d^p(φ(ω), ψ(ω)))^{1/p}`.
pub fn lp_distance_rv(
    p: f64,
    phi: &RandomVariable,
    psi: &RandomVariable,
    prob: &FiniteProbabilitySpace,
) -> Result<f64> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::input(format!("exponent must lie in [1, inf), got {p}")));
    }
    if phi.space != psi.space {
        return Err(Error::input("random variables take values in different spaces"));
    }
    phi.check_against(prob)?;
    psi.check_against(prob)?;
    let mut total = 0.0;
    for w in 0..prob.len() {
        let pw = prob.weight(w);
        if pw > 0.0 {
            total += pw * phi.space.dist(&phi.values[w], &psi.values[w])?.powf(p);
        }
    }
    Ok(total.powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_relabels_and_refines() {
        let b = Partition::from_ids(&[7, 3, 3]).unwrap();
        assert_eq!(b.ids(), &[0, 1, 1]);
        assert_eq!(b.blocks(), &[vec![0], vec![1, 2]]);
        let c = Partition::trivial(3).unwrap();
        assert!(b.refines(&c));
        assert!(!c.refines(&b));
        assert!(Partition::discrete(3).unwrap().refines(&b));
        let json = serde_json::to_string(&b).unwrap();
        assert_eq!(json, "[0,1,1]");
    }

    #[test]
    fn probability_validation() {
        assert!(FiniteProbabilitySpace::new(vec![0.5, 0.6]).is_err());
        assert!(FiniteProbabilitySpace::new(vec![-0.1, 1.1]).is_err());
        let p = FiniteProbabilitySpace::new(vec![0.0, 1.0]).unwrap();
        assert_eq!(p.null_atoms(), vec![0]);
    }

    #[test]
    fn lp_distance_example() {
        let line = Space::euclidean(1).unwrap();
        let r = |x: f64| Point::scalar(x).unwrap();
        let phi = RandomVariable::new(line, vec![r(0.0), r(0.0)]).unwrap();
        let psi = RandomVariable::new(line, vec![r(2.0), r(0.0)]).unwrap();
        let p = FiniteProbabilitySpace::uniform(2).unwrap();
        assert!((lp_distance_rv(1.0, &phi, &psi, &p).unwrap() - 1.0).abs() < 1e-15);
        assert!((lp_distance_rv(2.0, &phi, &psi, &p).unwrap() - 2f64.sqrt()).abs() < 1e-15);
    }
}
