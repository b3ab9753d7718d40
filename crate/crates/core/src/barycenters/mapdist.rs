//! Sampled lower bounds for the distance between two barycentric maps,
//! `d(β₁, β₂) = sup_x d(β₁(x), β₂(x)) / Δ(x)` over finite tuples `x`
//! (each read as the uniform measure on its entries).

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::BarycentricMap;
use crate::error::{Error, Result};
use crate::geometry::sample::random_point;
use crate::geometry::{Point, Space};
use crate::measures::DiscreteMeasure;
use crate::rng;

/// Tuples with a smaller diameter are skipped as degenerate.
const MIN_DIAMETER: f64 = 1e-12;

/// Seeded tuples; tuple `k` has `2..=max_n` points drawn from stream `(seed, k)`.
pub fn sample_tuples(space: &Space, budget: usize, seed: u64, max_n: usize) -> Result<Vec<Vec<Point>>> {
    if max_n < 2 {
        return Err(Error::input(format!("tuples need at least two points, max_n = {max_n}")));
    }
    Ok((0..budget)
        .map(|k| {
            let mut rng = rng::stream(seed, k as u64);
            let n = rng.random_range(2..=max_n);
            (0..n).map(|_| random_point(space, &mut rng)).collect()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapDistanceReport {
    pub lower_bound: f64,
    /// Tuple attaining the bound.
    pub witness: Option<Vec<Point>>,
    pub evaluated: usize,
    pub skipped: usize,
}

/// `d(β₁(x), β₂(x)) / Δ(x)` for every tuple; `None` marks a skipped tuple
/// (degenerate diameter or a solver failure).
pub fn tuple_ratios(
    b1: &BarycentricMap,
    b2: &BarycentricMap,
    space: &Space,
    tuples: &[Vec<Point>],
) -> Vec<Option<f64>> {
    tuples
        .par_iter()
        .map(|x| {
            let diam = space.diameter(x).ok()?;
            if diam <= MIN_DIAMETER {
                return None;
            }
            let mu = DiscreteMeasure::uniform(*space, x.clone()).ok()?;
            let y1 = b1.evaluate(&mu).ok()?;
            let y2 = b2.evaluate(&mu).ok()?;
            Some(space.dist(&y1, &y2).ok()? / diam)
        })
        .collect()
}

pub fn map_distance_on_tuples(
    b1: &BarycentricMap,
    b2: &BarycentricMap,
    space: &Space,
    tuples: &[Vec<Point>],
) -> Result<MapDistanceReport> {
    for b in [b1, b2] {
        if !b.supports(space) {
            return Err(Error::unsupported(format!(
                "{} is not defined on {}",
                b.name(),
                space.name()
            )));
        }
    }
    let ratios = tuple_ratios(b1, b2, space, tuples);
    let mut lower_bound = 0.0;
    let mut witness = None;
    let mut skipped = 0;
    for (k, r) in ratios.iter().enumerate() {
        match r {
            Some(r) if *r > lower_bound => {
                lower_bound = *r;
                witness = Some(k);
            }
            Some(_) => {}
            None => skipped += 1,
        }
    }
    Ok(MapDistanceReport {
        lower_bound,
        witness: witness.map(|k| tuples[k].clone()),
        evaluated: tuples.len() - skipped,
        skipped,
    })
}

/// Certified lower bound of `d(β₁, β₂)` from `budget` seeded tuples.
pub fn map_distance_lower_bound(
    b1: &BarycentricMap,
    b2: &BarycentricMap,
    space: &Space,
    budget: usize,
    seed: u64,
    max_n: usize,
) -> Result<MapDistanceReport> {
    let tuples = sample_tuples(space, budget, seed, max_n)?;
    map_distance_on_tuples(b1, b2, space, &tuples)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_maps_are_at_distance_zero() {
        let s = Space::spd_trace(2).unwrap();
        let k = BarycentricMap::karcher();
        let r = map_distance_lower_bound(&k, &k, &s, 20, 5, 4).unwrap();
        assert_eq!(r.lower_bound, 0.0);
        assert!(r.witness.is_none());
        assert_eq!(r.evaluated, 20);
    }

    #[test]
    fn euclidean_maps_agree() {
        let e = Space::euclidean(2).unwrap();
        let r = map_distance_lower_bound(
            &BarycentricMap::Arithmetic,
            &BarycentricMap::canonical_npc(),
            &e,
            30,
            1,
            5,
        )
        .unwrap();
        assert!(r.lower_bound < 1e-12);
    }

    #[test]
    fn rejects_short_tuples() {
        let e = Space::euclidean(1).unwrap();
        assert!(sample_tuples(&e, 1, 0, 1).is_err());
    }
}
