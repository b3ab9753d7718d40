//! Library results against independent closed forms and brute force.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use barylab::barycenters::{karcher_residual, BarycentricMap};
use barylab::condexp::{beta_conditional_expectation, FiniteProbabilitySpace, Partition, RandomVariable};
use barylab::geometry::{Point, Space};
use barylab::ldp::{event_probability, rate_inf_over_event, relative_entropy, wilson_interval, Event, IidModel};
use barylab::measures::{wasserstein, DiscreteMeasure};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn sym_fn(a: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let e = SymmetricEigen::new(a.clone());
    let d = DMatrix::from_diagonal(&e.eigenvalues.map(f));
    &e.eigenvectors * d * e.eigenvectors.transpose()
}

/// Eigenvalues of `A^{-1} B` through the Cholesky factor of `A`.
fn relative_spectrum(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DVector<f64> {
    let l = a.clone().cholesky().unwrap().l();
    let li = l.try_inverse().unwrap();
    let c = &li * b * li.transpose();
    SymmetricEigen::new((&c + c.transpose()) * 0.5).eigenvalues
}

fn random_spd_matrix(n: usize, r: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| r.random_range(-1.0..1.0));
    &g * g.transpose() + DMatrix::identity(n, n) * 0.5
}

fn spd(m: &DMatrix<f64>) -> Point {
    Point::spd(m.clone()).unwrap()
}

#[test]
fn spd_distances_match_relative_spectrum() {
    let mut r = rng(1);
    for n in 1..=5 {
        let trace = Space::spd_trace(n).unwrap();
        let thompson = Space::spd_thompson(n).unwrap();
        for _ in 0..10 {
            let a = random_spd_matrix(n, &mut r);
            let b = random_spd_matrix(n, &mut r);
            let logs = relative_spectrum(&a, &b).map(f64::ln);
            let expect_trace = logs.norm();
            let expect_thompson = logs.amax();
            let got = trace.dist(&spd(&a), &spd(&b)).unwrap();
            assert!((got - expect_trace).abs() <= 1e-10 * (1.0 + expect_trace), "{got} vs {expect_trace}");
            let got = thompson.dist(&spd(&a), &spd(&b)).unwrap();
            assert!((got - expect_thompson).abs() <= 1e-10 * (1.0 + expect_thompson));
        }
    }
}

#[test]
fn spd_geodesic_matches_power_formula() {
    let mut r = rng(2);
    let s = Space::spd_trace(3).unwrap();
    for _ in 0..20 {
        let a = random_spd_matrix(3, &mut r);
        let b = random_spd_matrix(3, &mut r);
        let t: f64 = r.random_range(0.0..1.0);
        let ah = sym_fn(&a, f64::sqrt);
        let aih = sym_fn(&a, |x| 1.0 / x.sqrt());
        let inner = &aih * &b * &aih;
        let expect = &ah * sym_fn(&((&inner + inner.transpose()) * 0.5), |x| x.powf(t)) * &ah;
        let got = s.geodesic(&spd(&a), &spd(&b), t).unwrap();
        let diff = (got.as_matrix().unwrap() - &expect).norm();
        assert!(diff <= 1e-10 * expect.norm(), "diff {diff}");
    }
}

/// `W_p^p = ∫₀¹ |F⁻¹(u) - G⁻¹(u)|^p du` for measures on the line.
fn quantile_wasserstein(p: f64, a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.0.total_cmp(&y.0));
    b.sort_by(|x, y| x.0.total_cmp(&y.0));
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (a[0].1, b[0].1);
    let mut total = 0.0;
    while i < a.len() && j < b.len() {
        let m = ra.min(rb);
        total += m * (a[i].0 - b[j].0).abs().powf(p);
        ra -= m;
        rb -= m;
        if ra <= 1e-15 {
            i += 1;
            if i < a.len() {
                ra += a[i].1;
            }
        }
        if rb <= 1e-15 {
            j += 1;
            if j < b.len() {
                rb += b[j].1;
            }
        }
    }
    total.powf(1.0 / p)
}

fn random_line_measure(r: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
    let k = r.random_range(1..=7);
    let raw: Vec<f64> = (0..k).map(|_| r.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| (r.random_range(-3.0..3.0), w / total)).collect()
}

fn line_measure(atoms: &[(f64, f64)]) -> DiscreteMeasure {
    DiscreteMeasure::new(
        Space::euclidean(1).unwrap(),
        atoms.iter().map(|(x, w)| (Point::scalar(*x).unwrap(), *w)).collect(),
    )
    .unwrap()
}

#[test]
fn line_wasserstein_matches_quantile_coupling() {
    let mut r = rng(3);
    for trial in 0..200 {
        let a = random_line_measure(&mut r);
        let b = random_line_measure(&mut r);
        for p in [1.0, 2.0, 3.5] {
            let expect = quantile_wasserstein(p, &a, &b);
            let (got, plan) = wasserstein(p, &line_measure(&a), &line_measure(&b)).unwrap();
            assert!((got - expect).abs() <= 1e-10, "trial {trial} p {p}: {got} vs {expect}");
            let wa: Vec<f64> = a.iter().map(|x| x.1).collect();
            let wb: Vec<f64> = b.iter().map(|x| x.1).collect();
            assert!(plan.marginal_error(&wa, &wb) <= 1e-10);
        }
    }
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for rest in permutations(k - 1) {
        for pos in 0..=rest.len() {
            let mut v = rest.clone();
            v.insert(pos, k - 1);
            out.push(v);
        }
    }
    out
}

#[test]
fn uniform_wasserstein_matches_best_assignment() {
    // Birkhoff: between uniform measures on k atoms some optimal plan is a permutation.
    let mut r = rng(4);
    let spaces = [
        Space::euclidean(2).unwrap(),
        Space::spd_trace(2).unwrap(),
        Space::spd_thompson(2).unwrap(),
    ];
    for space in spaces {
        for _ in 0..30 {
            let k = r.random_range(1..=5);
            let xs: Vec<Point> = (0..k).map(|_| barylab::geometry::sample::random_point(&space, &mut r)).collect();
            let ys: Vec<Point> = (0..k).map(|_| barylab::geometry::sample::random_point(&space, &mut r)).collect();
            for p in [1.0, 2.0] {
                let best = permutations(k)
                    .iter()
                    .map(|s| {
                        (0..k)
                            .map(|i| space.dist(&xs[i], &ys[s[i]]).unwrap().powf(p))
                            .sum::<f64>()
                            / k as f64
                    })
                    .fold(f64::INFINITY, f64::min)
                    .powf(1.0 / p);
                let mu = DiscreteMeasure::uniform(space, xs.clone()).unwrap();
                let nu = DiscreteMeasure::uniform(space, ys.clone()).unwrap();
                let (got, _) = wasserstein(p, &mu, &nu).unwrap();
                assert!((got - best).abs() <= 1e-10 * (1.0 + best), "{} p {p}: {got} vs {best}", space.name());
            }
        }
    }
}

#[test]
fn commuting_karcher_is_weighted_geometric_mean() {
    let mut r = rng(5);
    for n in 1..=6 {
        let space = Space::spd_trace(n).unwrap();
        let q = SymmetricEigen::new(random_spd_matrix(n, &mut r)).eigenvectors;
        for _ in 0..5 {
            let k = r.random_range(1..=6);
            let spectra: Vec<DVector<f64>> = (0..k)
                .map(|_| DVector::from_fn(n, |_, _| r.random_range(-2.0f64..2.0).exp()))
                .collect();
            let raw: Vec<f64> = (0..k).map(|_| r.random_range(0.05..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let w: Vec<f64> = raw.iter().map(|x| x / total).collect();
            let atoms: Vec<(Point, f64)> = spectra
                .iter()
                .zip(&w)
                .map(|(d, &wj)| (spd(&(&q * DMatrix::from_diagonal(d) * q.transpose())), wj))
                .collect();
            let mut log_mean = DVector::zeros(n);
            for (d, wj) in spectra.iter().zip(&w) {
                log_mean += d.map(f64::ln) * *wj;
            }
            let expect = &q * DMatrix::from_diagonal(&log_mean.map(f64::exp)) * q.transpose();
            let mu = DiscreteMeasure::new(space, atoms).unwrap();
            let got = BarycentricMap::karcher().evaluate(&mu).unwrap();
            let d = space.dist(&got, &spd(&expect)).unwrap();
            assert!(d <= 1e-10, "n {n} k {k}: {d}");
            assert!(karcher_residual(&got, &mu).unwrap() <= 1e-10);
        }
    }
}

#[test]
fn two_point_karcher_is_the_geodesic() {
    let mut r = rng(6);
    let space = Space::spd_trace(3).unwrap();
    for _ in 0..20 {
        let a = random_spd_matrix(3, &mut r);
        let b = random_spd_matrix(3, &mut r);
        let t: f64 = r.random_range(0.05..0.95);
        let mu = DiscreteMeasure::new(space, vec![(spd(&a), 1.0 - t), (spd(&b), t)]).unwrap();
        let got = BarycentricMap::karcher().evaluate(&mu).unwrap();
        let expect = space.geodesic(&spd(&a), &spd(&b), t).unwrap();
        assert!(space.dist(&got, &expect).unwrap() <= 1e-10);
    }
}

#[test]
fn arithmetic_conditional_expectation_is_block_average() {
    let mut r = rng(7);
    let space = Space::euclidean(3).unwrap();
    for _ in 0..30 {
        let n = r.random_range(1..=10);
        let raw: Vec<f64> = (0..n).map(|_| r.random_range(0.01..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let prob = FiniteProbabilitySpace::new(raw.iter().map(|x| x / total).collect()).unwrap();
        let ids: Vec<usize> = (0..n).map(|_| r.random_range(0..3)).collect();
        let b = Partition::from_ids(&ids).unwrap();
        let values: Vec<Point> = (0..n).map(|_| barylab::geometry::sample::random_vector(3, &mut r)).collect();
        let phi = RandomVariable::new(space, values.clone()).unwrap();
        let e = beta_conditional_expectation(&BarycentricMap::Arithmetic, &phi, &prob, &b).unwrap();
        for w in 0..n {
            let mut acc = DVector::zeros(3);
            let mut mass = 0.0;
            for v in 0..n {
                if ids[v] == ids[w] {
                    acc += values[v].as_vector().unwrap() * prob.weight(v);
                    mass += prob.weight(v);
                }
            }
            let expect = acc / mass;
            assert!((e.value(w).as_vector().unwrap() - expect).norm() <= 1e-12);
        }
    }
}

fn binomial(n: u64, k: u64) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

#[test]
fn fair_coin_tails_match_binomial_sums() {
    let model = IidModel::fair_coin();
    let event = Event::CoordinateAtLeast {
        index: 0,
        threshold: 0.75,
    };
    for n in [1u64, 4, 10, 20, 33, 40] {
        let first = (3 * n).div_ceil(4);
        let hits: u128 = (first..=n).map(|j| binomial(n, j)).sum();
        let expect = hits as f64 / 2f64.powi(n as i32);
        let got = event_probability(&model, n as usize, &event).unwrap();
        assert!((got - expect).abs() <= 1e-15 + 1e-13 * expect, "n {n}: {got} vs {expect}");
    }
}

#[test]
fn coin_rate_is_bernoulli_entropy() {
    let expect = 0.75 * 1.5f64.ln() + 0.25 * 0.5f64.ln();
    assert!((relative_entropy(&[0.25, 0.75], &[0.5, 0.5]).unwrap() - expect).abs() <= 1e-15);
    let event = Event::CoordinateAtLeast {
        index: 0,
        threshold: 0.75,
    };
    let rate = rate_inf_over_event(&IidModel::fair_coin(), &event, 40).unwrap();
    assert!((rate.value - expect).abs() <= 1e-12, "{} vs {expect}", rate.value);
}

#[test]
fn wilson_interval_matches_formula() {
    let z: f64 = 1.959963984540054;
    for (h, n) in [(0usize, 10usize), (3, 10), (50, 100), (999, 1000), (1000, 1000), (17, 20000)] {
        let p = h as f64 / n as f64;
        let nf = n as f64;
        let denom = 1.0 + z * z / nf;
        let centre = (p + z * z / (2.0 * nf)) / denom;
        let half = z * (p * (1.0 - p) / nf + z * z / (4.0 * nf * nf)).sqrt() / denom;
        let (lo, hi) = wilson_interval(h, n).unwrap();
        let elo = if h == 0 { 0.0 } else { centre - half };
        let ehi = if h == n { 1.0 } else { centre + half };
        assert!((lo - elo).abs() <= 1e-14 && (hi - ehi).abs() <= 1e-14, "{h}/{n}");
    }
}
