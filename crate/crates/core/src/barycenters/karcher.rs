//! Weighted Karcher (Cartan) mean of SPD matrices.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::{symmetrize, Point, SymEig};
use crate::measures::DiscreteMeasure;

const MAX_HALVINGS: usize = 40;

fn spd_atoms(mu: &DiscreteMeasure) -> Result<Vec<&DMatrix<f64>>> {
    mu.points()
        .iter()
        .map(|p| {
            p.as_matrix()
                .ok_or_else(|| Error::unsupported("Karcher mean requires SPD atoms"))
        })
        .collect()
}

/// `X^{1/2}`, `X^{-1/2}` and the gradient field `S(X) = Σ w_j log(X^{-1/2} A_j X^{-1/2})`.
struct Linearization {
    half: DMatrix<f64>,
    field: DMatrix<f64>,
    residual: f64,
}

fn linearize(x: &DMatrix<f64>, atoms: &[&DMatrix<f64>], weights: &[f64]) -> Result<Linearization> {
    let ex = SymEig::new(x)?;
    ex.require_positive("Karcher iterate")?;
    let half = ex.map(f64::sqrt);
    let inv_half = ex.map(|l| 1.0 / l.sqrt());
    let n = x.nrows();
    let mut field = DMatrix::zeros(n, n);
    for (a, &w) in atoms.iter().zip(weights) {
        if *a == x {
            // log(I) = 0 exactly; skip the rounding of X^{-1/2} X X^{-1/2}.
            continue;
        }
        let c = symmetrize(&(&inv_half * *a * &inv_half));
        let ec = SymEig::new(&c)?;
        ec.require_positive("Karcher residual")?;
        field += ec.map(f64::ln) * w;
    }
    let residual = field.norm();
    Ok(Linearization {
        half,
        field,
        residual,
    })
}

/// Frobenius norm of `Σ w_j log(X^{-1/2} A_j X^{-1/2})`; zero exactly at
/// the Karcher mean of `μ`.
pub fn karcher_residual(x: &Point, mu: &DiscreteMeasure) -> Result<f64> {
    mu.space().contains(x)?;
    let xm = x
        .as_matrix()
        .ok_or_else(|| Error::unsupported("Karcher residual requires an SPD point"))?;
    let atoms = spd_atoms(mu)?;
    Ok(linearize(xm, &atoms, mu.weights())?.residual)
}

/// Fixed-point iteration `X ← X^{1/2} exp(s S(X)) X^{1/2}` from the heaviest
/// atom, with `s = 1` halved whenever the residual fails to decrease.
/// Returns once `karcher_residual ≤ tol`.
pub fn karcher_mean(mu: &DiscreteMeasure, tol: f64, max_iter: usize) -> Result<Point> {
    if !mu.space().is_spd() {
        return Err(Error::unsupported(format!(
            "Karcher mean is defined on SPD spaces, not {}",
            mu.space().name()
        )));
    }
    let atoms = spd_atoms(mu)?;
    let weights = mu.weights();
    let start = weights
        .iter()
        .enumerate()
        .fold(0, |best, (k, &w)| if w > weights[best] { k } else { best });
    let mut x = atoms[start].clone();
    let mut lin = linearize(&x, &atoms, weights)?;
    let mut step = 1.0;
    let mut trace = vec![lin.residual];

    for iter in 0..max_iter {
        if lin.residual <= tol {
            return Ok(Point::Spd(x));
        }
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let update = SymEig::new(&(&lin.field * step))?.map(f64::exp);
            let candidate = symmetrize(&(&lin.half * update * &lin.half));
            let next = linearize(&candidate, &atoms, weights)?;
            if next.residual < lin.residual {
                x = candidate;
                lin = next;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        trace.push(lin.residual);
        if !accepted {
            return Err(Error::convergence(
                "Karcher iteration (stalled)",
                iter + 1,
                lin.residual,
                trace,
                Some(Point::Spd(x)),
            ));
        }
    }
    if lin.residual <= tol {
        return Ok(Point::Spd(x));
    }
    Err(Error::convergence(
        "Karcher iteration",
        max_iter,
        lin.residual,
        trace,
        Some(Point::Spd(x)),
    ))
}

/// `Σ w_j x_j` on Euclidean space.
pub fn weighted_mean(mu: &DiscreteMeasure) -> Result<Point> {
    let mut acc: Option<nalgebra::DVector<f64>> = None;
    for (p, w) in mu.atoms() {
        let v = p
            .as_vector()
            .ok_or_else(|| Error::unsupported("arithmetic mean requires vector atoms"))?;
        acc = Some(match acc {
            None => v * w,
            Some(a) => a + v * w,
        });
    }
    acc.map(Point::Vector)
        .ok_or_else(|| Error::input("mean of an empty measure"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Space;

    fn d(x: &[f64]) -> Point {
        Point::spd_diag(x).unwrap()
    }

    fn spd() -> Space {
        Space::spd_trace(2).unwrap()
    }

    #[test]
    fn commuting_pair_midpoint() {
        let mu = DiscreteMeasure::uniform(spd(), vec![Point::identity(2), d(&[4.0, 1.0])]).unwrap();
        let g = karcher_mean(&mu, 1e-12, 200).unwrap();
        let m = g.as_matrix().unwrap();
        assert!((m[(0, 0)] - 2.0).abs() < 1e-12 && (m[(1, 1)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weighted_commuting() {
        let mu = DiscreteMeasure::new(spd(), vec![(Point::identity(2), 0.25), (d(&[16.0, 1.0]), 0.75)]).unwrap();
        let g = karcher_mean(&mu, 1e-12, 200).unwrap();
        assert!((g.as_matrix().unwrap()[(0, 0)] - 8.0).abs() < 1e-10);
    }

    #[test]
    fn residual_examples() {
        let mu = DiscreteMeasure::uniform(spd(), vec![Point::identity(2), d(&[4.0, 1.0])]).unwrap();
        assert!(karcher_residual(&d(&[2.0, 1.0]), &mu).unwrap() < 1e-12);
        assert!((karcher_residual(&Point::identity(2), &mu).unwrap() - 4f64.ln() / 2.0).abs() < 1e-14);
        let dirac = DiscreteMeasure::dirac(spd(), d(&[3.0, 0.5])).unwrap();
        assert_eq!(karcher_residual(&d(&[3.0, 0.5]), &dirac).unwrap(), 0.0);
    }

    #[test]
    fn dirac_is_fixed() {
        let a = d(&[3.0, 0.5]);
        let g = karcher_mean(&DiscreteMeasure::dirac(spd(), a.clone()).unwrap(), 1e-12, 200).unwrap();
        assert!(g.bitwise_eq(&a));
    }

    #[test]
    fn iteration_cap_reports_best() {
        let mu = DiscreteMeasure::uniform(
            spd(),
            vec![
                Point::spd_from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap(),
                d(&[0.3, 5.0]),
                Point::spd_from_rows(&[vec![1.0, -0.4], vec![-0.4, 3.0]]).unwrap(),
            ],
        )
        .unwrap();
        match karcher_mean(&mu, 1e-12, 1) {
            Err(Error::Convergence { best, residual, .. }) => {
                assert!(best.is_some());
                assert!(residual > 1e-12);
            }
            other => panic!("expected convergence error, got {other:?}"),
        }
    }
}
