//! Conditional expectation as the `L²` projection onto block-constant maps:
//! on each block, the minimizer of `z ↦ Σ_{ω∈block} P(ω) d²(z, φ(ω))`.
//!
//! This path never builds conditional laws or calls a barycentric map, so
//! agreement with `E_B^λ` is a genuine cross-check. On SPD matrices the
//! block variance is minimized by Riemannian gradient descent with Armijo
//! backtracking on the variance itself.

use nalgebra::{DMatrix, DVector};

use super::types::{FiniteProbabilitySpace, Partition, RandomVariable};
use crate::error::{Error, Result};
use crate::geometry::{symmetrize, Geometry, Point, SymEig};

const GRADIENT_TOL: f64 = 1e-12;
const MAX_STEPS: usize = 2000;
const ARMIJO: f64 = 1e-4;
/// Below this predicted decrease (relative to the variance) the Armijo test
/// is swamped by rounding, and the half step is taken unconditionally.
const RESOLVABLE: f64 = 1e-12;

pub fn sturm_conditional_expectation(
    phi: &RandomVariable,
    prob: &FiniteProbabilitySpace,
    b: &Partition,
) -> Result<RandomVariable> {
    phi.check_against(prob)?;
    if b.len() != prob.len() {
        return Err(Error::input("partition and probability space differ in size"));
    }
    let space = *phi.space();
    if !space.is_npc() {
        return Err(Error::unsupported(format!(
            "variational conditional expectation needs a global NPC space, not {}",
            space.name()
        )));
    }
    let mut per_block = Vec::with_capacity(b.blocks().len());
    for block in b.blocks() {
        let mass = prob.mass(block);
        let weights: Vec<f64> = if mass > 0.0 {
            block.iter().map(|&w| prob.weight(w) / mass).collect()
        } else {
            vec![1.0 / block.len() as f64; block.len()]
        };
        let values: Vec<&Point> = block.iter().map(|&w| phi.value(w)).collect();
        let z = match space.geometry() {
            Geometry::Euclidean(n) => {
                let mut acc = DVector::zeros(n);
                for (v, w) in values.iter().zip(&weights) {
                    acc += v.as_vector().expect("euclidean value") * *w;
                }
                Point::Vector(acc)
            }
            Geometry::SpdTrace(_) => spd_variance_minimizer(&values, &weights)?,
            Geometry::SpdThompson(_) => unreachable!("rejected above"),
        };
        per_block.push(z);
    }
    RandomVariable::new(
        space,
        (0..prob.len()).map(|w| per_block[b.block_of(w)].clone()).collect(),
    )
}

struct Local {
    half: DMatrix<f64>,
    /// `S = Σ w log(X^{-1/2} A X^{-1/2})`; the Riemannian gradient of the
    /// variance is `-2 X^{1/2} S X^{1/2}`.
    field: DMatrix<f64>,
    variance: f64,
}

fn local(x: &DMatrix<f64>, atoms: &[&DMatrix<f64>], weights: &[f64]) -> Result<Local> {
    let e = SymEig::new(x)?;
    e.require_positive("variational iterate")?;
    let inv_half = e.map(|l| 1.0 / l.sqrt());
    let n = x.nrows();
    let mut field = DMatrix::zeros(n, n);
    let mut variance = 0.0;
    for (a, &w) in atoms.iter().zip(weights) {
        let c = SymEig::new(&symmetrize(&(&inv_half * *a * &inv_half)))?;
        c.require_positive("variational iterate")?;
        let log = c.map(f64::ln);
        variance += w * log.norm_squared();
        field += log * w;
    }
    Ok(Local {
        half: e.map(f64::sqrt),
        field,
        variance,
    })
}

fn spd_variance_minimizer(values: &[&Point], weights: &[f64]) -> Result<Point> {
    let atoms: Vec<&DMatrix<f64>> = values.iter().map(|v| v.as_matrix().expect("spd value")).collect();
    // Start from the first atom carrying mass.
    let start = weights.iter().position(|&w| w > 0.0).unwrap_or(0);
    let mut x = atoms[start].clone();
    let mut cur = local(&x, &atoms, weights)?;
    let mut trace = Vec::new();
    for _ in 0..MAX_STEPS {
        let g2 = cur.field.norm_squared();
        trace.push(g2.sqrt());
        if g2.sqrt() <= GRADIENT_TOL {
            return Point::spd_result(x, "variational conditional expectation");
        }
        let mut eta = 1.0;
        let mut moved = false;
        while eta > 1e-8 {
            let step = SymEig::new(&(&cur.field * (2.0 * eta)))?.map(f64::exp);
            let cand = symmetrize(&(&cur.half * step * &cur.half));
            let next = local(&cand, &atoms, weights)?;
            let predicted = ARMIJO * eta * 4.0 * g2;
            let unresolvable = predicted < RESOLVABLE * cur.variance.max(1.0);
            if next.variance <= cur.variance - predicted || (unresolvable && eta <= 0.5) {
                x = cand;
                cur = next;
                moved = true;
                break;
            }
            eta *= 0.5;
        }
        if !moved {
            break;
        }
    }
    let residual = cur.field.norm();
    Err(Error::convergence(
        "variational conditional expectation",
        trace.len(),
        residual,
        trace,
        Some(Point::Spd(x)),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Space;

    #[test]
    fn commuting_block_minimizer() {
        let s = Space::spd_trace(2).unwrap();
        let phi = RandomVariable::new(
            s,
            vec![Point::identity(2), Point::spd_diag(&[4.0, 1.0]).unwrap(), Point::spd_diag(&[9.0, 9.0]).unwrap()],
        )
        .unwrap();
        let p = FiniteProbabilitySpace::new(vec![0.25, 0.25, 0.5]).unwrap();
        let b = Partition::from_ids(&[0, 0, 1]).unwrap();
        let e = sturm_conditional_expectation(&phi, &p, &b).unwrap();
        let m = e.value(0).as_matrix().unwrap();
        assert!((m[(0, 0)] - 2.0).abs() < 1e-11 && (m[(1, 1)] - 1.0).abs() < 1e-11);
        assert!(e.value(2).bitwise_eq(phi.value(2)));
    }

    #[test]
    fn euclidean_block_means() {
        let line = Space::euclidean(1).unwrap();
        let r = |x: f64| Point::scalar(x).unwrap();
        let phi = RandomVariable::new(line, vec![r(0.0), r(3.0), r(5.0)]).unwrap();
        let p = FiniteProbabilitySpace::new(vec![0.5, 0.25, 0.25]).unwrap();
        let e = sturm_conditional_expectation(&phi, &p, &Partition::trivial(3).unwrap()).unwrap();
        assert!((e.value(0).as_vector().unwrap()[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn thompson_is_rejected() {
        let s = Space::spd_thompson(2).unwrap();
        let phi = RandomVariable::constant(s, Point::identity(2), 2).unwrap();
        let p = FiniteProbabilitySpace::uniform(2).unwrap();
        assert!(matches!(
            sturm_conditional_expectation(&phi, &p, &Partition::trivial(2).unwrap()),
            Err(Error::Unsupported(_))
        ));
    }
}
