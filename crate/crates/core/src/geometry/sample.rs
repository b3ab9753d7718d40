//! Random points used by audits and property tests.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{Geometry, Point, Space};

/// Coordinates uniform in `[-2, 2]`.
pub fn random_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Point {
    Point::Vector(DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0)))
}

/// Haar-ish orthogonal matrix from the QR factor of a Gaussian matrix.
pub fn random_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    g.qr().q()
}

/// `Q diag(e^{s_i}) Qᵀ` with log-eigenvalues `s_i` uniform in `[-spread, spread]`.
pub fn random_spd<R: Rng + ?Sized>(n: usize, spread: f64, rng: &mut R) -> Point {
    let q = random_orthogonal(n, rng);
    let d = DVector::from_fn(n, |_, _| rng.random_range(-spread..=spread).exp());
    let m = &q * DMatrix::from_diagonal(&d) * q.transpose();
    Point::spd(m).expect("spectrum spread keeps the matrix well conditioned")
}

/// A random point of `space` (SPD log-spectrum spread 1.5).
pub fn random_point<R: Rng + ?Sized>(space: &Space, rng: &mut R) -> Point {
    match space.geometry() {
        Geometry::Euclidean(n) => random_vector(n, rng),
        Geometry::SpdTrace(n) | Geometry::SpdThompson(n) => random_spd(n, 1.5, rng),
    }
}

/// Random probability vector of length `k` with entries bounded away from 0.
pub fn random_weights<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}
