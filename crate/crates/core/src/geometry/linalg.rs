//! Symmetric matrix functions by dense eigendecomposition.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest eigenvalue accepted for a positive-definite matrix.
pub const SPD_EIGEN_FLOOR: f64 = 1e-12;
/// Largest tolerated entrywise asymmetry of a "symmetric" input.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Inputs with a larger spectral condition number are rejected.
pub const MAX_CONDITION: f64 = 1e8;

const EIGEN_MAX_SWEEPS: usize = 10_000;

/// A scalar function lifted to symmetric matrices through `A = Q diag(λ) Qᵀ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixFunction {
    Log,
    Exp,
    Sqrt,
    Power(f64),
}

/// Eigendecomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub(crate) struct SymEig {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl SymEig {
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::input(format!(
                "expected a square matrix, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("matrix has non-finite entries"));
        }
        let eig = a
            .clone()
            .try_symmetric_eigen(f64::EPSILON, EIGEN_MAX_SWEEPS)
            .ok_or_else(|| Error::domain("symmetric eigen-solver failed to converge"))?;
        if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("symmetric eigen-solver produced non-finite eigenvalues"));
        }
        Ok(SymEig {
            values: eig.eigenvalues,
            vectors: eig.eigenvectors,
        })
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `Q f(Λ) Qᵀ`, symmetrized.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let q = &self.vectors;
        let mut scaled = q.clone();
        for (j, &lam) in self.values.iter().enumerate() {
            let fl = f(lam);
            scaled.column_mut(j).scale_mut(fl);
        }
        symmetrize(&(scaled * q.transpose()))
    }

    pub fn require_positive(&self, context: &str) -> Result<()> {
        let min = self.min();
        if min > SPD_EIGEN_FLOOR {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "{context}: minimum eigenvalue {min:e} not above {SPD_EIGEN_FLOOR:e}"
            )))
        }
    }
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub(crate) fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Applies `kind` to the symmetric matrix `a`.
///
/// `Log`, `Sqrt` and `Power` require a positive-definite argument, `Exp`
/// only symmetry.
pub fn matrix_function(kind: MatrixFunction, a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !a.is_square() {
        return Err(Error::input("matrix function of a non-square matrix"));
    }
    let asym = max_asymmetry(a);
    if asym > SYMMETRY_TOL {
        return Err(Error::domain(format!(
            "matrix is not symmetric (max asymmetry {asym:e})"
        )));
    }
    let eig = SymEig::new(&symmetrize(a))?;
    match kind {
        MatrixFunction::Exp => Ok(eig.map(f64::exp)),
        MatrixFunction::Log => {
            eig.require_positive("matrix logarithm")?;
            Ok(eig.map(f64::ln))
        }
        MatrixFunction::Sqrt => {
            eig.require_positive("matrix square root")?;
            Ok(eig.map(f64::sqrt))
        }
        MatrixFunction::Power(t) => {
            if !t.is_finite() {
                return Err(Error::input("matrix power exponent must be finite"));
            }
            eig.require_positive("matrix power")?;
            Ok(eig.map(|l| l.powf(t)))
        }
    }
}
