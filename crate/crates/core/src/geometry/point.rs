use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::linalg::{max_asymmetry, symmetrize, SymEig, MAX_CONDITION, SYMMETRY_TOL};
use crate::error::{Error, Result};

/// An element of one of the concrete metric spaces: a real vector or a
/// symmetric positive-definite matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PointRepr", into = "PointRepr")]
pub enum Point {
    Vector(DVector<f64>),
    Spd(DMatrix<f64>),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PointRepr {
    Matrix(Vec<Vec<f64>>),
    Vector(Vec<f64>),
}

impl TryFrom<PointRepr> for Point {
    type Error = Error;

    fn try_from(repr: PointRepr) -> Result<Self> {
        match repr {
            PointRepr::Vector(v) => Point::vector(v),
            PointRepr::Matrix(rows) => Point::spd_from_rows(&rows),
        }
    }
}

impl From<Point> for PointRepr {
    fn from(p: Point) -> Self {
        match p {
            Point::Vector(v) => PointRepr::Vector(v.iter().copied().collect()),
            Point::Spd(m) => PointRepr::Matrix(
                (0..m.nrows())
                    .map(|i| m.row(i).iter().copied().collect())
                    .collect(),
            ),
        }
    }
}

impl Point {
    pub fn vector(values: impl Into<Vec<f64>>) -> Result<Point> {
        let values = values.into();
        if values.is_empty() {
            return Err(Error::input("vector point must have at least one coordinate"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("vector point has non-finite entries"));
        }
        Ok(Point::Vector(DVector::from_vec(values)))
    }

    pub fn scalar(x: f64) -> Result<Point> {
        Point::vector(vec![x])
    }

    /// Validates and wraps an SPD matrix: symmetric within `1e-12`, minimum
    /// eigenvalue above `1e-12` and condition number at most `1e8`.
    pub fn spd(m: DMatrix<f64>) -> Result<Point> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::input(format!(
                "SPD point must be a non-empty square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let asym = max_asymmetry(&m);
        if asym > SYMMETRY_TOL {
            return Err(Error::domain(format!(
                "matrix is not symmetric (max asymmetry {asym:e})"
            )));
        }
        let m = symmetrize(&m);
        let eig = SymEig::new(&m)?;
        eig.require_positive("SPD point")?;
        let cond = eig.max() / eig.min();
        if cond > MAX_CONDITION {
            return Err(Error::domain(format!(
                "condition number {cond:e} exceeds {MAX_CONDITION:e}"
            )));
        }
        Ok(Point::Spd(m))
    }

    pub fn spd_from_rows(rows: &[Vec<f64>]) -> Result<Point> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::input("matrix rows must all have length equal to the row count"));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Point::spd(DMatrix::from_row_slice(n, n, &flat))
    }

    pub fn spd_diag(d: &[f64]) -> Result<Point> {
        Point::spd(DMatrix::from_diagonal(&DVector::from_row_slice(d)))
    }

    pub fn identity(n: usize) -> Point {
        Point::Spd(DMatrix::identity(n, n))
    }

    /// Result of a composite matrix computation: symmetrized and re-checked
    /// for positive definiteness (no condition-number guard).
    pub(crate) fn spd_result(m: DMatrix<f64>, context: &str) -> Result<Point> {
        let m = symmetrize(&m);
        SymEig::new(&m)?.require_positive(context)?;
        Ok(Point::Spd(m))
    }

    pub fn dim(&self) -> usize {
        match self {
            Point::Vector(v) => v.len(),
            Point::Spd(m) => m.nrows(),
        }
    }

    pub fn is_spd(&self) -> bool {
        matches!(self, Point::Spd(_))
    }

    pub fn as_vector(&self) -> Option<&DVector<f64>> {
        match self {
            Point::Vector(v) => Some(v),
            Point::Spd(_) => None,
        }
    }

    pub fn as_matrix(&self) -> Option<&DMatrix<f64>> {
        match self {
            Point::Spd(m) => Some(m),
            Point::Vector(_) => None,
        }
    }

    pub(crate) fn entries(&self) -> &[f64] {
        match self {
            Point::Vector(v) => v.as_slice(),
            Point::Spd(m) => m.as_slice(),
        }
    }

    /// Entries in row-major order (vectors as-is).
    pub fn to_row_major(&self) -> Vec<f64> {
        match self {
            Point::Vector(v) => v.iter().copied().collect(),
            Point::Spd(m) => (0..m.nrows())
                .flat_map(|i| m.row(i).iter().copied().collect::<Vec<_>>())
                .collect(),
        }
    }

    /// Equality of every entry's bit pattern.
    pub fn bitwise_eq(&self, other: &Point) -> bool {
        self.is_spd() == other.is_spd()
            && self.dim() == other.dim()
            && self
                .entries()
                .iter()
                .zip(other.entries())
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }

    /// Total order on bit patterns; used to canonicalize argument order.
    pub(crate) fn bit_cmp(&self, other: &Point) -> Ordering {
        self.is_spd()
            .cmp(&other.is_spd())
            .then(self.dim().cmp(&other.dim()))
            .then_with(|| {
                self.entries()
                    .iter()
                    .map(|v| v.to_bits())
                    .cmp(other.entries().iter().map(|v| v.to_bits()))
            })
    }

    /// Matrix inverse of an SPD point.
    pub fn spd_inverse(&self) -> Result<Point> {
        let m = self
            .as_matrix()
            .ok_or_else(|| Error::domain("inverse requires an SPD point"))?;
        let eig = SymEig::new(m)?;
        eig.require_positive("SPD inverse")?;
        Point::spd_result(eig.map(|l| 1.0 / l), "SPD inverse")
    }
}
