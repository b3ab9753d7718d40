//! Contractive barycentric maps `β: P(M) → M` and the tools for auditing them.

pub(crate) mod audit;
mod esh;
mod karcher;
mod mapdist;
mod semiflow;

use serde::{Deserialize, Serialize};

pub use audit::{
    contractivity_audit, contractivity_audit_with, monotonicity_audit, AuditReport, AuditWitness, TrialFailure,
    AUDIT_THRESHOLD,
};
pub use esh::es_sahib_heinich;
pub use karcher::{karcher_mean, karcher_residual, weighted_mean};
pub use mapdist::{
    map_distance_lower_bound, map_distance_on_tuples, sample_tuples, tuple_ratios, MapDistanceReport,
};
pub use semiflow::{
    semiflow_audit, semiflow_fixed_point, semiflow_limit_report, SemiflowAudit, SemiflowLimitReport,
    SemiflowSample,
};

use crate::error::{Error, Result};
use crate::geometry::{Geometry, Point, Space};
use crate::measures::DiscreteMeasure;

/// Tolerance for the barycentric axiom `β(δ_x) = x`.
pub const DIRAC_TOL: f64 = 1e-10;

/// Largest common denominator accepted when expanding a measure into a
/// uniform atom list for the Es-Sahib–Heinich map.
pub const ESH_MAX_DENOMINATOR: usize = 64;

fn default_tol() -> f64 {
    1e-12
}

fn default_max_iter() -> usize {
    200
}

fn default_semiflow_tol() -> f64 {
    1e-10
}

/// Serializable description of a barycentric map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BarycentricMap {
    /// Weighted arithmetic mean on Euclidean space.
    Arithmetic,
    /// Karcher mean of SPD matrices.
    Karcher {
        #[serde(default = "default_tol")]
        tol: f64,
        #[serde(default = "default_max_iter")]
        max_iter: usize,
    },
    /// Variance minimizer `λ` on a global NPC space.
    CanonicalNpc {
        #[serde(default = "default_tol")]
        tol: f64,
        #[serde(default = "default_max_iter")]
        max_iter: usize,
    },
    /// Recursive leave-one-out barycenter.
    EsSahibHeinich {
        #[serde(default = "default_tol")]
        tol: f64,
        #[serde(default = "default_max_iter")]
        max_iter: usize,
    },
    /// `Φ(t, inner)`: the fixed point of `x ↦ inner(x #_t μ)`.
    SemiflowImage {
        t: f64,
        inner: Box<BarycentricMap>,
        #[serde(default = "default_semiflow_tol")]
        tol: f64,
    },
    /// `μ ↦ left(μ) #_t right(μ)`.
    GeodesicCombination {
        left: Box<BarycentricMap>,
        right: Box<BarycentricMap>,
        t: f64,
    },
}

impl BarycentricMap {
    pub fn karcher() -> Self {
        BarycentricMap::Karcher {
            tol: default_tol(),
            max_iter: default_max_iter(),
        }
    }

    pub fn canonical_npc() -> Self {
        BarycentricMap::CanonicalNpc {
            tol: default_tol(),
            max_iter: default_max_iter(),
        }
    }

    pub fn es_sahib_heinich() -> Self {
        BarycentricMap::EsSahibHeinich {
            tol: default_tol(),
            max_iter: default_max_iter(),
        }
    }

    pub fn semiflow(t: f64, inner: BarycentricMap) -> Self {
        BarycentricMap::SemiflowImage {
            t,
            inner: Box::new(inner),
            tol: default_semiflow_tol(),
        }
    }

    pub fn name(&self) -> String {
        match self {
            BarycentricMap::Arithmetic => "arithmetic".into(),
            BarycentricMap::Karcher { .. } => "karcher".into(),
            BarycentricMap::CanonicalNpc { .. } => "canonical_npc".into(),
            BarycentricMap::EsSahibHeinich { .. } => "es_sahib_heinich".into(),
            BarycentricMap::SemiflowImage { t, inner, .. } => format!("semiflow({t}, {})", inner.name()),
            BarycentricMap::GeodesicCombination { left, right, t } => {
                format!("{} #_{t} {}", left.name(), right.name())
            }
        }
    }

    /// Declared contractivity exponent: every map here is 1-contractive on
    /// its supported geometries, hence `p`-contractive for all `p ≥ 1`.
    pub fn declared_exponent(&self) -> f64 {
        1.0
    }

    /// Whether the map is defined on `space`.
    pub fn supports(&self, space: &Space) -> bool {
        match self {
            BarycentricMap::Arithmetic => matches!(space.geometry(), Geometry::Euclidean(_)),
            BarycentricMap::Karcher { .. } => space.is_spd(),
            BarycentricMap::CanonicalNpc { .. } => space.is_npc(),
            BarycentricMap::EsSahibHeinich { .. } => true,
            BarycentricMap::SemiflowImage { inner, .. } => space.is_npc() && inner.supports(space),
            BarycentricMap::GeodesicCombination { left, right, .. } => {
                space.is_npc() && left.supports(space) && right.supports(space)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check_tol = |tol: f64| {
            if tol.is_finite() && tol > 0.0 {
                Ok(())
            } else {
                Err(Error::input(format!("solver tolerance must be positive, got {tol}")))
            }
        };
        match self {
            BarycentricMap::Arithmetic => Ok(()),
            BarycentricMap::Karcher { tol, .. }
            | BarycentricMap::CanonicalNpc { tol, .. }
            | BarycentricMap::EsSahibHeinich { tol, .. } => check_tol(*tol),
            BarycentricMap::SemiflowImage { t, inner, tol } => {
                if !(*t > 0.0 && *t <= 1.0) {
                    return Err(Error::input(format!("semiflow parameter must lie in (0, 1], got {t}")));
                }
                check_tol(*tol)?;
                inner.validate()
            }
            BarycentricMap::GeodesicCombination { left, right, t } => {
                if !(0.0..=1.0).contains(t) {
                    return Err(Error::input(format!("combination parameter must lie in [0, 1], got {t}")));
                }
                left.validate()?;
                right.validate()
            }
        }
    }

    /// `β(μ)`. Dirac inputs are checked against the barycentric axiom.
    pub fn evaluate(&self, mu: &DiscreteMeasure) -> Result<Point> {
        self.validate()?;
        let space = mu.space();
        if !self.supports(space) {
            return Err(Error::unsupported(format!(
                "{} is not defined on {}",
                self.name(),
                space.name()
            )));
        }
        let value = self.evaluate_unchecked(mu)?;
        if mu.is_dirac() {
            let gap = space.dist(&value, &mu.points()[0])?;
            if gap > DIRAC_TOL {
                return Err(Error::domain(format!(
                    "{} violates beta(delta_x) = x by {gap:e}",
                    self.name()
                )));
            }
        }
        Ok(value)
    }

    pub(crate) fn evaluate_unchecked(&self, mu: &DiscreteMeasure) -> Result<Point> {
        match self {
            BarycentricMap::Arithmetic => weighted_mean(mu),
            BarycentricMap::Karcher { tol, max_iter } => karcher_mean(mu, *tol, *max_iter),
            BarycentricMap::CanonicalNpc { tol, max_iter } => canonical_npc(mu, *tol, *max_iter),
            BarycentricMap::EsSahibHeinich { tol, max_iter } => {
                let count = mu.uniform_denominator(ESH_MAX_DENOMINATOR).ok_or_else(|| {
                    Error::unsupported(format!(
                        "Es-Sahib-Heinich map needs weights with common denominator <= {ESH_MAX_DENOMINATOR}"
                    ))
                })?;
                let list = mu
                    .as_uniform_list(count)
                    .ok_or_else(|| Error::unsupported("measure is not a uniform atom list"))?;
                es_sahib_heinich(mu.space(), &list, *tol, *max_iter)
            }
            BarycentricMap::SemiflowImage { t, inner, tol } => semiflow_fixed_point(inner, *t, mu, *tol),
            BarycentricMap::GeodesicCombination { left, right, t } => {
                let a = left.evaluate_unchecked(mu)?;
                let b = right.evaluate_unchecked(mu)?;
                mu.space().geodesic(&a, &b, *t)
            }
        }
    }
}

/// `β₁ #_t β₂`.
pub fn geodesic_combination(left: BarycentricMap, right: BarycentricMap, t: f64) -> Result<BarycentricMap> {
    let map = BarycentricMap::GeodesicCombination {
        left: Box::new(left),
        right: Box::new(right),
        t,
    };
    map.validate()?;
    Ok(map)
}

/// The canonical barycenter `λ(μ) = argmin_z Σ w_j d²(z, x_j)` with a
/// first-order stationarity check.
pub fn canonical_npc(mu: &DiscreteMeasure, tol: f64, max_iter: usize) -> Result<Point> {
    let space = mu.space();
    match space.geometry() {
        Geometry::Euclidean(_) => {
            let z = weighted_mean(mu)?;
            let zv = z.as_vector().expect("euclidean mean is a vector");
            let mut grad = nalgebra::DVector::zeros(zv.len());
            for (p, w) in mu.atoms() {
                grad += (zv - p.as_vector().expect("euclidean atom")) * (2.0 * w);
            }
            let g = grad.norm();
            let scale = mu.support_diameter()?.max(1.0);
            if g > tol * scale {
                return Err(Error::convergence("canonical mean stationarity", 1, g, vec![g], Some(z)));
            }
            Ok(z)
        }
        Geometry::SpdTrace(_) => karcher_mean(mu, tol, max_iter),
        Geometry::SpdThompson(_) => Err(Error::unsupported(
            "the Thompson metric is not a global NPC geometry; canonical barycenter undefined",
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r2(x: f64, y: f64) -> Point {
        Point::vector(vec![x, y]).unwrap()
    }

    #[test]
    fn arithmetic_example() {
        let e = Space::euclidean(2).unwrap();
        let mu = DiscreteMeasure::uniform(e, vec![r2(0.0, 0.0), r2(2.0, 4.0)]).unwrap();
        assert_eq!(BarycentricMap::Arithmetic.evaluate(&mu).unwrap(), r2(1.0, 2.0));
    }

    #[test]
    fn geometry_support() {
        let e = Space::euclidean(1).unwrap();
        let s = Space::spd_trace(2).unwrap();
        let t = Space::spd_thompson(2).unwrap();
        assert!(!BarycentricMap::Arithmetic.supports(&s));
        assert!(!BarycentricMap::karcher().supports(&e));
        assert!(BarycentricMap::karcher().supports(&t));
        assert!(!BarycentricMap::canonical_npc().supports(&t));
        assert!(!BarycentricMap::semiflow(0.5, BarycentricMap::karcher()).supports(&t));
        let mu = DiscreteMeasure::dirac(s, Point::identity(2)).unwrap();
        assert!(matches!(
            BarycentricMap::Arithmetic.evaluate(&mu),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn json_descriptor_round_trip() {
        let map = geodesic_combination(
            BarycentricMap::karcher(),
            BarycentricMap::semiflow(0.25, BarycentricMap::es_sahib_heinich()),
            0.5,
        )
        .unwrap();
        let text = serde_json::to_string(&map).unwrap();
        assert_eq!(serde_json::from_str::<BarycentricMap>(&text).unwrap(), map);
        let parsed: BarycentricMap = serde_json::from_str(r#"{"type":"karcher"}"#).unwrap();
        assert_eq!(parsed, BarycentricMap::karcher());
    }

    #[test]
    fn combination_endpoints() {
        let s = Space::spd_trace(2).unwrap();
        let mu = DiscreteMeasure::uniform(
            s,
            vec![
                Point::spd_from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap(),
                Point::spd_diag(&[0.5, 3.0]).unwrap(),
                Point::identity(2),
            ],
        )
        .unwrap();
        let k = BarycentricMap::karcher();
        let e = BarycentricMap::es_sahib_heinich();
        let at0 = geodesic_combination(k.clone(), e.clone(), 0.0).unwrap();
        let at1 = geodesic_combination(k.clone(), e.clone(), 1.0).unwrap();
        assert!(at0.evaluate(&mu).unwrap().bitwise_eq(&k.evaluate(&mu).unwrap()));
        assert!(at1.evaluate(&mu).unwrap().bitwise_eq(&e.evaluate(&mu).unwrap()));
        assert!(geodesic_combination(k, e, 1.5).is_err());
    }

    #[test]
    fn canonical_examples() {
        let line = Space::euclidean(1).unwrap();
        let mu = DiscreteMeasure::uniform(line, vec![Point::scalar(0.0).unwrap(), Point::scalar(4.0).unwrap()]).unwrap();
        assert_eq!(canonical_npc(&mu, 1e-12, 200).unwrap(), Point::scalar(2.0).unwrap());
    }
}
