//! The rate function `I(x) = inf { S(p ‖ w) : β(Σ p_j δ_{A_j}) = x }`,
//! approximated on the simplex lattice `{k/m}`.

use serde::{Deserialize, Serialize};

use super::{compositions, Event, IidModel, MAX_COMPOSITIONS};
use crate::error::{Error, Result};
use crate::geometry::{Point, Space};

/// Default tolerance for the constraint `β(p) = x`, in the space metric.
pub const DEFAULT_MATCH_TOL: f64 = 1e-6;

/// Local refinement rounds; each halves the lattice spacing.
const REFINEMENTS: u32 = 6;

/// `S(p ‖ w) = Σ p_j ln(p_j / w_j)` with `0 ln 0 = 0`.
pub fn relative_entropy(p: &[f64], w: &[f64]) -> Result<f64> {
    if p.len() != w.len() {
        return Err(Error::input(format!("lengths differ ({} vs {})", p.len(), w.len())));
    }
    if p.iter().any(|x| !x.is_finite() || *x < 0.0) || w.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::input("relative entropy of non-probability vectors"));
    }
    let mut s = 0.0;
    for (&a, &b) in p.iter().zip(w) {
        if a > 0.0 {
            if b == 0.0 {
                return Ok(f64::INFINITY);
            }
            s += a * (a / b).ln();
        }
    }
    Ok(s.max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    /// Best entropy found; `+∞` when no lattice point qualifies.
    pub value: f64,
    /// Probability vector attaining `value`.
    pub witness: Option<Vec<f64>>,
    /// False when the constraint set met no lattice point.
    pub matched: bool,
    pub match_tol: f64,
    pub grid_resolution: usize,
    pub lattice_points: usize,
    /// Lattice points whose `β`-value could not be computed.
    pub skipped: usize,
}

fn check_grid(model: &IidModel, m: usize) -> Result<Vec<Vec<usize>>> {
    if m == 0 {
        return Err(Error::input("grid resolution must be positive"));
    }
    let lattice = compositions(m, model.k());
    if lattice.len() > MAX_COMPOSITIONS {
        return Err(Error::capacity(format!(
            "lattice of {} points exceeds {MAX_COMPOSITIONS}",
            lattice.len()
        )));
    }
    Ok(lattice)
}

fn to_probability(c: &[usize], m: usize) -> Vec<f64> {
    c.iter().map(|&k| k as f64 / m as f64).collect()
}

/// `β`-values on a lattice, `None` where the solver failed.
fn lattice_values(model: &IidModel, lattice: &[Vec<usize>]) -> Vec<Option<Point>> {
    match model.values_of_counts(lattice) {
        Ok(v) => v.into_iter().map(Some).collect(),
        Err(_) => lattice
            .iter()
            .map(|c| model.values_of_counts(std::slice::from_ref(c)).ok().map(|mut v| v.remove(0)))
            .collect(),
    }
}

/// Lattice points at resolution `m` inside the box `|c/m - center|_∞ ≤ radius`.
fn box_points(center: &[f64], radius: f64, m: usize) -> Vec<Vec<usize>> {
    let k = center.len();
    let lo: Vec<usize> = center
        .iter()
        .map(|c| ((c - radius) * m as f64).ceil().max(0.0) as usize)
        .collect();
    let hi: Vec<usize> = center
        .iter()
        .map(|c| (((c + radius) * m as f64).floor() as usize).min(m))
        .collect();
    let mut out = Vec::new();
    let mut cur = vec![0usize; k];
    fn rec(j: usize, left: usize, lo: &[usize], hi: &[usize], cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let k = cur.len();
        if j == k - 1 {
            if left >= lo[j] && left <= hi[j] {
                cur[j] = left;
                out.push(cur.clone());
            }
            return;
        }
        for v in lo[j]..=hi[j].min(left) {
            cur[j] = v;
            rec(j + 1, left - v, lo, hi, cur, out);
        }
    }
    rec(0, m, &lo, &hi, &mut cur, &mut out);
    out
}

/// Best matching point so far, or the closest non-matching one.
#[derive(Default)]
struct Search {
    best: Option<(f64, Vec<f64>)>,
    closest: Option<(f64, Vec<f64>)>,
    skipped: usize,
}

impl Search {
    fn consider(&mut self, p: Vec<f64>, value: Option<&Point>, x: &Point, space: &Space, w: &[f64], tol: f64) -> Result<()> {
        let Some(v) = value else {
            self.skipped += 1;
            return Ok(());
        };
        let d = space.dist(v, x)?;
        if d <= tol {
            let s = relative_entropy(&p, w)?;
            if self.best.as_ref().is_none_or(|(b, _)| s < *b) {
                self.best = Some((s, p));
            }
        } else if self.best.is_none() && self.closest.as_ref().is_none_or(|(b, _)| d < *b) {
            self.closest = Some((d, p));
        }
        Ok(())
    }
}

/// `I(x)` from the lattice `{k/m}` plus local refinement around the best
/// point. Points match when `d(β(p), x) ≤ match_tol`; if none does, the
/// refinement starts from the closest point and the result may stay `+∞`.
pub fn rate_function(model: &IidModel, x: &Point, grid_resolution: usize, match_tol: f64) -> Result<RateEstimate> {
    model.space().contains(x)?;
    let lattice = check_grid(model, grid_resolution)?;
    let values = lattice_values(model, &lattice);
    let space = model.space();
    let w = model.weights();

    let mut search = Search::default();
    for (c, v) in lattice.iter().zip(&values) {
        search.consider(to_probability(c, grid_resolution), v.as_ref(), x, space, w, match_tol)?;
    }
    let mut points = lattice.len();
    let mut m = grid_resolution;
    for _ in 0..REFINEMENTS {
        let center = match (&search.best, &search.closest) {
            (Some((_, p)), _) => p.clone(),
            (None, Some((_, p))) => p.clone(),
            (None, None) => break,
        };
        let radius = 1.0 / m as f64;
        m *= 2;
        let local = box_points(&center, radius, m);
        let vals = lattice_values(model, &local);
        points += local.len();
        for (c, v) in local.iter().zip(&vals) {
            search.consider(to_probability(c, m), v.as_ref(), x, space, w, match_tol)?;
        }
    }
    let skipped = search.skipped;
    Ok(match search.best {
        Some((value, p)) => RateEstimate {
            value,
            witness: Some(p),
            matched: true,
            match_tol,
            grid_resolution,
            lattice_points: points,
            skipped,
        },
        None => RateEstimate {
            value: f64::INFINITY,
            witness: None,
            matched: false,
            match_tol,
            grid_resolution,
            lattice_points: points,
            skipped,
        },
    })
}

/// `inf { S(p ‖ w) : β(p) ∈ Γ }` over the lattice `{k/m}`.
pub fn rate_inf_over_event(model: &IidModel, event: &Event, grid_resolution: usize) -> Result<RateEstimate> {
    let event = event.resolve(model)?;
    let lattice = check_grid(model, grid_resolution)?;
    let values = lattice_values(model, &lattice);
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut skipped = 0;
    for (c, v) in lattice.iter().zip(&values) {
        let Some(v) = v else {
            skipped += 1;
            continue;
        };
        if event.holds(v, model.space())? {
            let p = to_probability(c, grid_resolution);
            let s = relative_entropy(&p, model.weights())?;
            if best.as_ref().is_none_or(|(b, _)| s < *b) {
                best = Some((s, p));
            }
        }
    }
    let matched = best.is_some();
    let (value, witness) = match best {
        Some((s, p)) => (s, Some(p)),
        None => (f64::INFINITY, None),
    };
    Ok(RateEstimate {
        value,
        witness,
        matched,
        match_tol: 0.0,
        grid_resolution,
        lattice_points: lattice.len(),
        skipped,
    })
}

/// Heuristic check that `p ↦ β(Σ p_j δ_{A_j})` is injective on the lattice.
/// A collision refutes general position; its absence proves nothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralPositionReport {
    pub grid_resolution: usize,
    pub pairs_checked: usize,
    /// Smallest `d(β(p), β(q))` over lattice pairs with `|p - q|_∞ ≥ 2/m`.
    pub min_separation: f64,
    pub witness: Option<(Vec<f64>, Vec<f64>)>,
    pub collision: bool,
    pub label: String,
}

pub fn general_position_probe(model: &IidModel, grid_resolution: usize, separation_tol: f64) -> Result<GeneralPositionReport> {
    let lattice = check_grid(model, grid_resolution)?;
    let values = model.values_of_counts(&lattice)?;
    let space = model.space();
    let mut min_separation = f64::INFINITY;
    let mut witness = None;
    let mut pairs_checked = 0;
    for i in 0..lattice.len() {
        for j in i + 1..lattice.len() {
            let far = lattice[i]
                .iter()
                .zip(&lattice[j])
                .any(|(a, b)| a.abs_diff(*b) >= 2);
            if !far {
                continue;
            }
            pairs_checked += 1;
            let d = space.dist(&values[i], &values[j])?;
            if d < min_separation {
                min_separation = d;
                witness = Some((to_probability(&lattice[i], grid_resolution), to_probability(&lattice[j], grid_resolution)));
            }
        }
    }
    let collision = min_separation <= separation_tol;
    Ok(GeneralPositionReport {
        grid_resolution,
        pairs_checked,
        min_separation,
        witness,
        collision,
        label: if collision {
            "collision found: general position refuted".into()
        } else {
            "injectivity not refuted (heuristic)".into()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barycenters::BarycentricMap;

    const COIN_RATE: f64 = 0.130_812_035_941_137_1;

    #[test]
    fn entropy_examples() {
        assert_eq!(relative_entropy(&[0.5, 0.5], &[0.5, 0.5]).unwrap(), 0.0);
        assert!((relative_entropy(&[0.75, 0.25], &[0.5, 0.5]).unwrap() - COIN_RATE).abs() < 1e-15);
        assert!((relative_entropy(&[1.0, 0.0], &[0.5, 0.5]).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!(relative_entropy(&[1.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn coin_rate() {
        let m = IidModel::fair_coin();
        let at_mean = rate_function(&m, &Point::scalar(0.5).unwrap(), 40, DEFAULT_MATCH_TOL).unwrap();
        assert_eq!(at_mean.value, 0.0);
        let r = rate_function(&m, &Point::scalar(0.75).unwrap(), 40, DEFAULT_MATCH_TOL).unwrap();
        assert!((r.value - COIN_RATE).abs() < 1e-12);
        let far = rate_function(&m, &Point::scalar(3.0).unwrap(), 40, DEFAULT_MATCH_TOL).unwrap();
        assert!(!far.matched && far.value.is_infinite());
        let off_grid = rate_function(&m, &Point::scalar(0.6875).unwrap(), 8, DEFAULT_MATCH_TOL).unwrap();
        assert!(off_grid.matched, "{off_grid:?}");
        let ev = rate_inf_over_event(&m, &Event::CoordinateAtLeast { index: 0, threshold: 0.75 }, 40).unwrap();
        assert!((ev.value - COIN_RATE).abs() < 1e-12);
        let never = rate_inf_over_event(&m, &Event::CoordinateAtLeast { index: 0, threshold: 2.0 }, 40).unwrap();
        assert!(never.value.is_infinite());
    }

    #[test]
    fn general_position() {
        let m = IidModel::fair_coin();
        assert!(!general_position_probe(&m, 20, 1e-9).unwrap().collision);
        let line = Space::euclidean(1).unwrap();
        let x = Point::scalar(1.0).unwrap();
        let degenerate = IidModel::new(line, vec![x.clone(), x], vec![0.5, 0.5], BarycentricMap::Arithmetic).unwrap();
        assert!(general_position_probe(&degenerate, 10, 1e-9).unwrap().collision);
    }
}
