//! Large deviations of `β(μ_n)` for i.i.d. samples from a finitely supported
//! law: exact multinomial enumeration, the contraction-principle rate
//! function on a simplex lattice, and Monte Carlo cross-checks.

mod enumerate;
mod rate;
mod sampling;

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use enumerate::{
    compositions, enumerate_empirical_distribution, event_probability, ldp_gap_report, EmpiricalEntry,
    LdpReport, LdpRow, MAX_ATOMS, MAX_COMPOSITIONS, MAX_SAMPLE_SIZE,
};
pub use rate::{
    general_position_probe, rate_function, rate_inf_over_event, relative_entropy, GeneralPositionReport,
    RateEstimate, DEFAULT_MATCH_TOL,
};
pub use sampling::{iid_slln_trial, monte_carlo_event_probability, wilson_interval, MonteCarloEstimate, SllnReport};

use crate::barycenters::BarycentricMap;
use crate::error::{Error, Result};
use crate::geometry::{Point, Space};
use crate::measures::{DiscreteMeasure, MASS_TOL};

/// `μ₀ = Σ w_j δ_{A_j}` together with the barycentric map under study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelRepr", into = "ModelRepr")]
pub struct IidModel {
    space: Space,
    atoms: Vec<Point>,
    weights: Vec<f64>,
    map: BarycentricMap,
}

#[derive(Serialize, Deserialize)]
struct ModelRepr {
    space: Space,
    atoms: Vec<Point>,
    weights: Vec<f64>,
    map: BarycentricMap,
}

impl TryFrom<ModelRepr> for IidModel {
    type Error = Error;
    fn try_from(r: ModelRepr) -> Result<Self> {
        IidModel::new(r.space, r.atoms, r.weights, r.map)
    }
}

impl From<IidModel> for ModelRepr {
    fn from(m: IidModel) -> Self {
        ModelRepr {
            space: m.space,
            atoms: m.atoms,
            weights: m.weights,
            map: m.map,
        }
    }
}

impl IidModel {
    pub fn new(space: Space, atoms: Vec<Point>, weights: Vec<f64>, map: BarycentricMap) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != weights.len() {
            return Err(Error::input(format!(
                "model needs matching nonempty atoms and weights (got {} and {})",
                atoms.len(),
                weights.len()
            )));
        }
        for a in &atoms {
            space.contains(a)?;
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::input("model weights must be strictly positive"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::input(format!("model weights sum to {total}, not 1")));
        }
        if !map.supports(&space) {
            return Err(Error::unsupported(format!(
                "{} is not defined on {}",
                map.name(),
                space.name()
            )));
        }
        Ok(IidModel {
            space,
            atoms,
            weights,
            map,
        })
    }

    /// Fair coin on `{0, 1} ⊂ ℝ` with the arithmetic mean.
    pub fn fair_coin() -> Self {
        let line = Space::euclidean(1).expect("dimension 1");
        Self::new(
            line,
            vec![Point::scalar(0.0).expect("finite"), Point::scalar(1.0).expect("finite")],
            vec![0.5, 0.5],
            BarycentricMap::Arithmetic,
        )
        .expect("valid model")
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn atoms(&self) -> &[Point] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn map(&self) -> &BarycentricMap {
        &self.map
    }

    pub fn k(&self) -> usize {
        self.atoms.len()
    }

    /// `Σ_j p_j δ_{A_j}`.
    pub fn measure(&self, p: &[f64]) -> Result<DiscreteMeasure> {
        DiscreteMeasure::normalized(
            self.space,
            self.atoms.iter().cloned().zip(p.iter().copied()).collect(),
        )
    }

    /// `β(μ₀)`.
    pub fn base_value(&self) -> Result<Point> {
        self.map.evaluate(&self.measure(&self.weights)?)
    }

    /// `β(Σ (c_j / total) δ_{A_j})`.
    fn value_of_counts(&self, counts: &[usize]) -> Result<Point> {
        let total: usize = counts.iter().sum();
        let p: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();
        self.map.evaluate(&self.measure(&p)?)
    }

    /// `β`-values for a list of count vectors. Count vectors describing the
    /// same measure (equal after dividing by their gcd) share one solve.
    pub(crate) fn values_of_counts(&self, counts: &[Vec<usize>]) -> Result<Vec<Point>> {
        let mut index: HashMap<Vec<usize>, usize> = HashMap::new();
        let mut unique: Vec<Vec<usize>> = Vec::new();
        let slots: Vec<usize> = counts
            .iter()
            .map(|c| {
                let r = reduce(c);
                *index.entry(r.clone()).or_insert_with(|| {
                    unique.push(r);
                    unique.len() - 1
                })
            })
            .collect();
        let values: Vec<Point> = unique
            .par_iter()
            .map(|c| self.value_of_counts(c))
            .collect::<Result<_>>()?;
        Ok(slots.into_iter().map(|s| values[s].clone()).collect())
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Divides a count vector by the gcd of its entries.
fn reduce(counts: &[usize]) -> Vec<usize> {
    let g = counts.iter().fold(0, |g, &c| gcd(g, c)).max(1);
    counts.iter().map(|c| c / g).collect()
}

/// Pairwise summation in index order.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Events `Γ ⊆ M` for `β(μ_n) ∈ Γ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    Always,
    /// Row-major coordinate `index` of the point is at least `threshold`.
    CoordinateAtLeast { index: usize, threshold: f64 },
    /// `d(x, center) ≥ radius`; the center defaults to `β(μ₀)`.
    BallComplement {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Point>,
        radius: f64,
    },
}

impl Event {
    /// Fills in a default center.
    pub fn resolve(&self, model: &IidModel) -> Result<Event> {
        Ok(match self {
            Event::BallComplement { center: None, radius } => Event::BallComplement {
                center: Some(model.base_value()?),
                radius: *radius,
            },
            other => other.clone(),
        })
    }

    pub fn holds(&self, x: &Point, space: &Space) -> Result<bool> {
        match self {
            Event::Always => Ok(true),
            Event::CoordinateAtLeast { index, threshold } => {
                let v = x.to_row_major();
                v.get(*index)
                    .map(|c| *c >= *threshold)
                    .ok_or_else(|| Error::input(format!("coordinate {index} out of range")))
            }
            Event::BallComplement { center, radius } => {
                let c = center
                    .as_ref()
                    .ok_or_else(|| Error::input("ball center unresolved"))?;
                Ok(space.dist(x, c)? >= *radius)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduce_and_sum() {
        assert_eq!(reduce(&[2, 4, 0]), vec![1, 2, 0]);
        assert_eq!(reduce(&[0, 3]), vec![0, 1]);
        let xs: Vec<f64> = (0..100).map(|k| k as f64).collect();
        assert_eq!(pairwise_sum(&xs), 4950.0);
    }

    #[test]
    fn model_validation() {
        let line = Space::euclidean(1).unwrap();
        let a = vec![Point::scalar(0.0).unwrap(), Point::scalar(1.0).unwrap()];
        assert!(IidModel::new(line, a.clone(), vec![1.0, 0.0], BarycentricMap::Arithmetic).is_err());
        assert!(IidModel::new(line, a.clone(), vec![0.5, 0.5], BarycentricMap::karcher()).is_err());
        let m = IidModel::fair_coin();
        assert_eq!(m.base_value().unwrap(), Point::scalar(0.5).unwrap());
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(serde_json::from_str::<IidModel>(&json).unwrap(), m);
    }

    #[test]
    fn events() {
        let m = IidModel::fair_coin();
        let e = Event::BallComplement { center: None, radius: 0.25 }.resolve(&m).unwrap();
        assert!(e.holds(&Point::scalar(0.75).unwrap(), m.space()).unwrap());
        assert!(!e.holds(&Point::scalar(0.6).unwrap(), m.space()).unwrap());
        let c = Event::CoordinateAtLeast { index: 0, threshold: 0.75 };
        assert!(c.holds(&Point::scalar(0.75).unwrap(), m.space()).unwrap());
    }
}
