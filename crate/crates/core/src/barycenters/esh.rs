//! Es-Sahib–Heinich barycenter of a finite list of points.
//!
//! `β_1(x) = x`, `β_2(x, y) = x #_{1/2} y`, and for `n ≥ 3` the list is
//! repeatedly replaced by its leave-one-out barycenters
//! `y_i = β_{n-1}(x_1, …, x̂_i, …, x_n)` until its diameter is below the
//! tolerance. The diameter contracts strictly each round, so all points
//! converge to a common limit.

use crate::error::{Error, Result};
use crate::geometry::{Point, Space};

pub fn es_sahib_heinich(space: &Space, points: &[Point], tol: f64, max_iter: usize) -> Result<Point> {
    if points.is_empty() {
        return Err(Error::input("Es-Sahib-Heinich barycenter of an empty list"));
    }
    for p in points {
        space.contains(p)?;
    }
    recurse(space, points, tol, max_iter)
}

fn recurse(space: &Space, points: &[Point], tol: f64, max_iter: usize) -> Result<Point> {
    match points.len() {
        1 => Ok(points[0].clone()),
        2 => space.geodesic(&points[0], &points[1], 0.5),
        n => {
            let mut current = points.to_vec();
            let mut trace = Vec::new();
            for _ in 0..max_iter {
                let diam = space.diameter(&current)?;
                trace.push(diam);
                if diam <= tol {
                    return Ok(current.swap_remove(0));
                }
                let mut next = Vec::with_capacity(n);
                let mut others: Vec<Point> = Vec::with_capacity(n - 1);
                for i in 0..n {
                    others.clear();
                    others.extend(
                        current
                            .iter()
                            .enumerate()
                            .filter(|(k, _)| *k != i)
                            .map(|(_, p)| p.clone()),
                    );
                    next.push(recurse(space, &others, tol, max_iter)?);
                }
                current = next;
            }
            let diam = space.diameter(&current)?;
            if diam <= tol {
                return Ok(current.swap_remove(0));
            }
            Err(Error::convergence(
                format!("Es-Sahib-Heinich iteration on {n} points"),
                max_iter,
                diam,
                trace,
                Some(current.swap_remove(0)),
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(x: f64) -> Point {
        Point::scalar(x).unwrap()
    }

    #[test]
    fn small_cases() {
        let line = Space::euclidean(1).unwrap();
        assert_eq!(es_sahib_heinich(&line, &[r(5.0)], 1e-12, 100).unwrap(), r(5.0));
        assert_eq!(es_sahib_heinich(&line, &[r(1.0), r(3.0)], 1e-12, 100).unwrap(), r(2.0));
        let spd = Space::spd_trace(2).unwrap();
        let a = Point::spd_diag(&[4.0, 1.0]).unwrap();
        let m = es_sahib_heinich(&spd, &[Point::identity(2), a], 1e-12, 100).unwrap();
        assert!((m.as_matrix().unwrap()[(0, 0)] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn flat_space_gives_centroid() {
        let line = Space::euclidean(1).unwrap();
        let m = es_sahib_heinich(&line, &[r(0.0), r(3.0), r(6.0)], 1e-12, 200).unwrap();
        assert!((m.as_vector().unwrap()[0] - 3.0).abs() < 1e-11);
        let m4 = es_sahib_heinich(&line, &[r(0.0), r(1.0), r(2.0), r(9.0)], 1e-12, 200).unwrap();
        assert!((m4.as_vector().unwrap()[0] - 3.0).abs() < 1e-11);
    }

    #[test]
    fn cap_is_a_convergence_error() {
        let line = Space::euclidean(1).unwrap();
        let err = es_sahib_heinich(&line, &[r(0.0), r(3.0), r(6.0)], 1e-12, 2).unwrap_err();
        assert!(matches!(err, Error::Convergence { .. }));
    }
}
