use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, Space};

/// Tolerance on the total mass of a probability vector.
pub const MASS_TOL: f64 = 1e-12;
/// Smallest admissible positive atom weight.
pub const MIN_WEIGHT: f64 = 1e-15;

/// A finitely supported probability measure on a [`Space`].
///
/// Atoms with bitwise-identical points are merged on construction; exact
/// zero weights are dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureRepr", into = "MeasureRepr")]
pub struct DiscreteMeasure {
    space: Space,
    points: Vec<Point>,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AtomRepr {
    point: Point,
    weight: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasureRepr {
    space: Space,
    atoms: Vec<AtomRepr>,
}

impl TryFrom<MeasureRepr> for DiscreteMeasure {
    type Error = Error;

    fn try_from(r: MeasureRepr) -> Result<Self> {
        DiscreteMeasure::new(
            r.space,
            r.atoms.into_iter().map(|a| (a.point, a.weight)).collect(),
        )
    }
}

impl From<DiscreteMeasure> for MeasureRepr {
    fn from(m: DiscreteMeasure) -> Self {
        MeasureRepr {
            space: m.space,
            atoms: m
                .points
                .into_iter()
                .zip(m.weights)
                .map(|(point, weight)| AtomRepr { point, weight })
                .collect(),
        }
    }
}

impl DiscreteMeasure {
    pub fn new(space: Space, atoms: Vec<(Point, f64)>) -> Result<DiscreteMeasure> {
        let mut points: Vec<Point> = Vec::with_capacity(atoms.len());
        let mut weights: Vec<f64> = Vec::with_capacity(atoms.len());
        for (p, w) in atoms {
            space.contains(&p)?;
            if !w.is_finite() || w < 0.0 {
                return Err(Error::input(format!("atom weight {w} is not a finite nonnegative number")));
            }
            if w == 0.0 {
                continue;
            }
            if w < MIN_WEIGHT {
                return Err(Error::input(format!("atom weight {w:e} below {MIN_WEIGHT:e}")));
            }
            match points.iter().position(|q| q.bitwise_eq(&p)) {
                Some(k) => weights[k] += w,
                None => {
                    points.push(p);
                    weights.push(w);
                }
            }
        }
        if points.is_empty() {
            return Err(Error::input("measure has no atoms of positive weight"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::input(format!("atom weights sum to {total}, not 1")));
        }
        Ok(DiscreteMeasure {
            space,
            points,
            weights,
        })
    }

    /// Like [`DiscreteMeasure::new`] after dividing every weight by the total.
    pub fn normalized(space: Space, atoms: Vec<(Point, f64)>) -> Result<DiscreteMeasure> {
        let total: f64 = atoms.iter().map(|(_, w)| *w).sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::domain("cannot normalize a measure of zero total mass"));
        }
        DiscreteMeasure::new(
            space,
            atoms.into_iter().map(|(p, w)| (p, w / total)).collect(),
        )
    }

    pub fn dirac(space: Space, x: Point) -> Result<DiscreteMeasure> {
        DiscreteMeasure::new(space, vec![(x, 1.0)])
    }

    /// Uniform measure on a list; repeated points accumulate weight.
    pub fn uniform(space: Space, points: Vec<Point>) -> Result<DiscreteMeasure> {
        let n = points.len();
        if n == 0 {
            return Err(Error::input("uniform measure on an empty list"));
        }
        let w = 1.0 / n as f64;
        DiscreteMeasure::normalized(space, points.into_iter().map(|p| (p, w)).collect())
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&Point, f64)> {
        self.points.iter().zip(self.weights.iter().copied())
    }

    pub fn is_dirac(&self) -> bool {
        self.points.len() == 1
    }

    pub fn support_diameter(&self) -> Result<f64> {
        self.space.diameter(&self.points)
    }

    /// Push-forward by `f` into `target`, merging coincident images.
    pub fn pushforward<F>(&self, target: Space, mut f: F) -> Result<DiscreteMeasure>
    where
        F: FnMut(&Point) -> Result<Point>,
    {
        let mut atoms = Vec::with_capacity(self.len());
        for (p, w) in self.atoms() {
            let image = f(p)?;
            target.contains(&image).map_err(|e| match e {
                Error::Input(msg) => Error::domain(format!("push-forward image: {msg}")),
                other => other,
            })?;
            atoms.push((image, w));
        }
        DiscreteMeasure::new(target, atoms)
    }

    /// Expands the measure into a list of `count` equally weighted points,
    /// if every weight is a multiple of `1/count` (within `1e-9`).
    pub fn as_uniform_list(&self, count: usize) -> Option<Vec<Point>> {
        let mut out = Vec::with_capacity(count);
        for (p, w) in self.atoms() {
            let m = w * count as f64;
            let k = m.round();
            if (m - k).abs() > 1e-9 || k < 1.0 {
                return None;
            }
            out.extend(std::iter::repeat_n(p.clone(), k as usize));
        }
        (out.len() == count).then_some(out)
    }

    /// Smallest `N ≤ max_denominator` such that all weights are multiples of `1/N`.
    pub fn uniform_denominator(&self, max_denominator: usize) -> Option<usize> {
        (1..=max_denominator).find(|&n| self.as_uniform_list(n).is_some())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(x: f64) -> Point {
        Point::scalar(x).unwrap()
    }

    #[test]
    fn merges_and_validates() {
        let line = Space::euclidean(1).unwrap();
        let m = DiscreteMeasure::new(line, vec![(r(1.0), 0.25), (r(1.0), 0.25), (r(2.0), 0.5)]).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.weights(), &[0.5, 0.5]);
        assert!(DiscreteMeasure::new(line, vec![(r(1.0), 0.6)]).is_err());
        assert!(DiscreteMeasure::new(line, vec![(r(1.0), 1.0), (r(2.0), 1e-17)]).is_err());
        let dropped = DiscreteMeasure::new(line, vec![(r(1.0), 1.0), (r(2.0), 0.0)]).unwrap();
        assert!(dropped.is_dirac());
    }

    #[test]
    fn pushforward_examples() {
        let line = Space::euclidean(1).unwrap();
        let mu = DiscreteMeasure::new(line, vec![(r(0.0), 0.5), (r(1.0), 0.5)]).unwrap();
        let collapsed = mu.pushforward(line, |_| Ok(r(0.0))).unwrap();
        assert_eq!(collapsed, DiscreteMeasure::dirac(line, r(0.0)).unwrap());
        assert_eq!(mu.pushforward(line, |p| Ok(p.clone())).unwrap(), mu);

        let spd = Space::spd_trace(2).unwrap();
        let nu = DiscreteMeasure::new(
            spd,
            vec![(Point::identity(2), 0.5), (Point::spd_diag(&[4.0, 1.0]).unwrap(), 0.5)],
        )
        .unwrap();
        let inv = nu.pushforward(spd, |p| p.spd_inverse()).unwrap();
        let m = inv.points()[1].as_matrix().unwrap();
        assert!((m[(0, 0)] - 0.25).abs() < 1e-15);
        assert_eq!(inv.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn pushforward_into_wrong_space_is_domain_error() {
        let line = Space::euclidean(1).unwrap();
        let mu = DiscreteMeasure::dirac(line, r(0.0)).unwrap();
        let err = mu
            .pushforward(line, |_| Point::vector(vec![0.0, 1.0]))
            .unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn uniform_expansion() {
        let line = Space::euclidean(1).unwrap();
        let mu = DiscreteMeasure::new(line, vec![(r(0.0), 0.25), (r(1.0), 0.75)]).unwrap();
        assert_eq!(mu.uniform_denominator(64), Some(4));
        assert_eq!(mu.as_uniform_list(4).unwrap().len(), 4);
        let odd = DiscreteMeasure::new(line, vec![(r(0.0), 0.3), (r(1.0), 0.7)]).unwrap();
        assert_eq!(odd.uniform_denominator(64), Some(10));
        let irrational = DiscreteMeasure::new(
            line,
            vec![(r(0.0), 1.0 / std::f64::consts::PI), (r(1.0), 1.0 - 1.0 / std::f64::consts::PI)],
        )
        .unwrap();
        assert_eq!(irrational.uniform_denominator(64), None);
    }

    #[test]
    fn json_shape() {
        let line = Space::euclidean(1).unwrap();
        let mu = DiscreteMeasure::new(line, vec![(r(0.0), 0.5), (r(1.0), 0.5)]).unwrap();
        let v = serde_json::to_value(&mu).unwrap();
        assert_eq!(v["atoms"][1]["point"], serde_json::json!([1.0]));
        let back: DiscreteMeasure = serde_json::from_value(v).unwrap();
        assert_eq!(back, mu);
    }
}
