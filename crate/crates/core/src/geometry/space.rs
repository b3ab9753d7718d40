use serde::{Deserialize, Serialize};

use super::convexity::convexity_constant;
use super::linalg::{symmetrize, SymEig};
use super::point::Point;
use crate::error::{Error, Result};

/// The metric carried by a space. SPD geometries share the point set and
/// the `#_t` curve but differ in the norm applied to `log(A^{-1/2} B A^{-1/2})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Geometry {
    Euclidean(usize),
    /// Affine-invariant Riemannian metric (Frobenius norm of the log).
    SpdTrace(usize),
    /// Thompson part metric (operator norm of the log).
    SpdThompson(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    None,
    Loewner,
}

/// A complete metric space together with an optional partial order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "SpaceRepr", into = "SpaceRepr")]
pub struct Space {
    geometry: Geometry,
    order: Order,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum GeometryTag {
    Euclidean,
    SpdTrace,
    SpdThompson,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpaceRepr {
    geometry: GeometryTag,
    dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    order: Option<Order>,
}

impl TryFrom<SpaceRepr> for Space {
    type Error = Error;

    fn try_from(r: SpaceRepr) -> Result<Space> {
        let space = match r.geometry {
            GeometryTag::Euclidean => Space::euclidean(r.dim),
            GeometryTag::SpdTrace => Space::spd_trace(r.dim),
            GeometryTag::SpdThompson => Space::spd_thompson(r.dim),
        }?;
        match r.order {
            Some(order) => space.with_order(order),
            None => Ok(space),
        }
    }
}

impl From<Space> for SpaceRepr {
    fn from(s: Space) -> Self {
        let (geometry, dim) = match s.geometry {
            Geometry::Euclidean(n) => (GeometryTag::Euclidean, n),
            Geometry::SpdTrace(n) => (GeometryTag::SpdTrace, n),
            Geometry::SpdThompson(n) => (GeometryTag::SpdThompson, n),
        };
        SpaceRepr {
            geometry,
            dim,
            order: Some(s.order),
        }
    }
}

impl Space {
    pub fn euclidean(n: usize) -> Result<Space> {
        Space::new(Geometry::Euclidean(n), Order::None)
    }

    /// SPD matrices with the trace metric; Löwner-ordered.
    pub fn spd_trace(n: usize) -> Result<Space> {
        Space::new(Geometry::SpdTrace(n), Order::Loewner)
    }

    /// SPD matrices with the Thompson metric; Löwner-ordered.
    pub fn spd_thompson(n: usize) -> Result<Space> {
        Space::new(Geometry::SpdThompson(n), Order::Loewner)
    }

    pub fn new(geometry: Geometry, order: Order) -> Result<Space> {
        let dim = match geometry {
            Geometry::Euclidean(n) | Geometry::SpdTrace(n) | Geometry::SpdThompson(n) => n,
        };
        if dim == 0 {
            return Err(Error::input("space dimension must be positive"));
        }
        if order == Order::Loewner && matches!(geometry, Geometry::Euclidean(_)) {
            return Err(Error::input("Loewner order requires an SPD geometry"));
        }
        Ok(Space { geometry, order })
    }

    pub fn with_order(self, order: Order) -> Result<Space> {
        Space::new(self.geometry, order)
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn dim(&self) -> usize {
        match self.geometry {
            Geometry::Euclidean(n) | Geometry::SpdTrace(n) | Geometry::SpdThompson(n) => n,
        }
    }

    /// Global NPC (CAT(0)) spaces: Euclidean and the trace-metric SPD cone.
    pub fn is_npc(&self) -> bool {
        !matches!(self.geometry, Geometry::SpdThompson(_))
    }

    pub fn is_spd(&self) -> bool {
        !matches!(self.geometry, Geometry::Euclidean(_))
    }

    pub fn name(&self) -> String {
        match self.geometry {
            Geometry::Euclidean(n) => format!("euclidean({n})"),
            Geometry::SpdTrace(n) => format!("spd_trace({n})"),
            Geometry::SpdThompson(n) => format!("spd_thompson({n})"),
        }
    }

    /// Checks that `p` has the variant and size of this space.
    pub fn contains(&self, p: &Point) -> Result<()> {
        let ok = match (self.geometry, p) {
            (Geometry::Euclidean(n), Point::Vector(v)) => v.len() == n,
            (Geometry::SpdTrace(n) | Geometry::SpdThompson(n), Point::Spd(m)) => m.nrows() == n,
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::input(format!(
                "point of {} dimension {} does not belong to {}",
                if p.is_spd() { "matrix" } else { "vector" },
                p.dim(),
                self.name()
            )))
        }
    }

    /// The metric. Exactly symmetric: arguments are put in a canonical
    /// order before evaluation.
    pub fn dist(&self, x: &Point, y: &Point) -> Result<f64> {
        self.contains(x)?;
        self.contains(y)?;
        if x.bitwise_eq(y) {
            return Ok(0.0);
        }
        let (x, y) = if x.bit_cmp(y).is_gt() { (y, x) } else { (x, y) };
        match (self.geometry, x, y) {
            (Geometry::Euclidean(_), Point::Vector(a), Point::Vector(b)) => Ok((a - b).norm()),
            (Geometry::SpdTrace(_), Point::Spd(a), Point::Spd(b)) => {
                let logs = log_spectrum(a, b)?;
                Ok(logs.iter().map(|l| l * l).sum::<f64>().sqrt())
            }
            (Geometry::SpdThompson(_), Point::Spd(a), Point::Spd(b)) => {
                let logs = log_spectrum(a, b)?;
                Ok(logs.iter().fold(0.0_f64, |m, l| m.max(l.abs())))
            }
            _ => unreachable!("membership checked above"),
        }
    }

    /// The curve `x #_t y`: affine on Euclidean space and
    /// `A^{1/2}(A^{-1/2}BA^{-1/2})^t A^{1/2}` on both SPD geometries.
    pub fn geodesic(&self, x: &Point, y: &Point, t: f64) -> Result<Point> {
        self.contains(x)?;
        self.contains(y)?;
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::input(format!("geodesic parameter {t} outside [0, 1]")));
        }
        if t == 0.0 || x.bitwise_eq(y) {
            return Ok(x.clone());
        }
        if t == 1.0 {
            return Ok(y.clone());
        }
        match (x, y) {
            (Point::Vector(a), Point::Vector(b)) => Ok(Point::Vector(a * (1.0 - t) + b * t)),
            (Point::Spd(a), Point::Spd(b)) => {
                let ea = SymEig::new(a)?;
                ea.require_positive("geodesic endpoint")?;
                let a_half = ea.map(f64::sqrt);
                let a_inv_half = ea.map(|l| 1.0 / l.sqrt());
                let c = symmetrize(&(&a_inv_half * b * &a_inv_half));
                let ec = SymEig::new(&c)?;
                ec.require_positive("geodesic")?;
                let ct = ec.map(|l| l.powf(t));
                Point::spd_result(&a_half * ct * &a_half, "geodesic point")
            }
            _ => unreachable!("membership checked above"),
        }
    }

    /// `max` pairwise distance of a finite set (0 for fewer than two points).
    pub fn diameter(&self, points: &[Point]) -> Result<f64> {
        let mut diam = 0.0_f64;
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                diam = diam.max(self.dist(&points[i], &points[j])?);
            }
        }
        Ok(diam)
    }

    /// Right-hand side minus left-hand side of the uniform `q`-convexity
    /// inequality `d^q(z, x#_t y) ≤ (1-t)d^q(z,x) + t d^q(z,y) - (k_q/2) t(1-t) d^q(x,y)`.
    pub fn uniform_convexity_residual(
        &self,
        z: &Point,
        x: &Point,
        y: &Point,
        t: f64,
        q: f64,
    ) -> Result<f64> {
        if !self.is_npc() {
            return Err(Error::unsupported(format!(
                "uniform convexity is only available on NPC spaces, not {}",
                self.name()
            )));
        }
        let k = convexity_constant(q)?.k_q;
        let m = self.geodesic(x, y, t)?;
        let lhs = self.dist(z, &m)?.powf(q);
        let rhs = (1.0 - t) * self.dist(z, x)?.powf(q) + t * self.dist(z, y)?.powf(q)
            - 0.5 * k * t * (1.0 - t) * self.dist(x, y)?.powf(q);
        Ok(rhs - lhs)
    }
}

/// Log-eigenvalues of `A^{-1/2} B A^{-1/2}`.
fn log_spectrum(a: &nalgebra::DMatrix<f64>, b: &nalgebra::DMatrix<f64>) -> Result<Vec<f64>> {
    let ea = SymEig::new(a)?;
    ea.require_positive("distance argument")?;
    let a_inv_half = ea.map(|l| 1.0 / l.sqrt());
    let c = symmetrize(&(&a_inv_half * b * &a_inv_half));
    let ec = SymEig::new(&c)?;
    ec.require_positive("distance argument")?;
    Ok(ec.values.iter().map(|l| l.ln()).collect())
}

/// Löwner order: `x ≤ y` iff `y - x` is positive semidefinite (within `1e-12`).
pub fn loewner_leq(x: &Point, y: &Point) -> Result<bool> {
    match (x, y) {
        (Point::Spd(a), Point::Spd(b)) if a.nrows() == b.nrows() => {
            let eig = SymEig::new(&symmetrize(&(b - a)))?;
            Ok(eig.min() >= -1e-12)
        }
        (Point::Spd(_), Point::Spd(_)) => Err(Error::input("Loewner comparison of different sizes")),
        _ => Err(Error::domain("Loewner order is defined only for SPD points")),
    }
}
