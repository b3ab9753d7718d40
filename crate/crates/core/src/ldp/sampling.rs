use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Event, IidModel};
use crate::error::{Error, Result};
use crate::rng::stream;

/// Two-sided 95% normal quantile.
const Z_95: f64 = 1.959_963_984_540_054;

/// Wilson score interval at 95% for `hits` successes out of `samples`.
pub fn wilson_interval(hits: usize, samples: usize) -> Result<(f64, f64)> {
    if samples == 0 || hits > samples {
        return Err(Error::input(format!("invalid counts {hits}/{samples}")));
    }
    let n = samples as f64;
    let p = hits as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z_95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lower = if hits == 0 { 0.0 } else { (center - half).max(0.0) };
    let upper = if hits == samples { 1.0 } else { (center + half).min(1.0) };
    Ok((lower, upper))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    pub hits: usize,
    pub samples: usize,
}

impl MonteCarloEstimate {
    pub fn contains(&self, p: f64) -> bool {
        self.lower <= p && p <= self.upper
    }
}

fn sampler(model: &IidModel) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(model.weights().iter().copied()).map_err(|e| Error::input(format!("bad weights: {e}")))
}

fn draw_counts(dist: &WeightedIndex<f64>, k: usize, n: usize, seed: u64, index: u64) -> Vec<usize> {
    let mut rng = stream(seed, index);
    let mut counts = vec![0; k];
    for _ in 0..n {
        counts[dist.sample(&mut rng)] += 1;
    }
    counts
}

/// Estimates `P(β(μ_n) ∈ Γ)` from `samples` independent empirical measures.
pub fn monte_carlo_event_probability(
    model: &IidModel,
    event: &Event,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    if n == 0 || samples == 0 {
        return Err(Error::input("sample size and sample count must be positive"));
    }
    let event = event.resolve(model)?;
    let dist = sampler(model)?;
    let k = model.k();
    let counts: Vec<Vec<usize>> = (0..samples as u64)
        .into_par_iter()
        .map(|i| draw_counts(&dist, k, n, seed, i))
        .collect();
    let values = model.values_of_counts(&counts)?;
    let mut hits = 0;
    for v in &values {
        if event.holds(v, model.space())? {
            hits += 1;
        }
    }
    let (lower, upper) = wilson_interval(hits, samples)?;
    Ok(MonteCarloEstimate {
        estimate: hits as f64 / samples as f64,
        lower,
        upper,
        hits,
        samples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SllnReport {
    pub checkpoints: Vec<usize>,
    /// `median[c]` and `max[c]` over successful trials at `checkpoints[c]`.
    pub median: Vec<f64>,
    pub max: Vec<f64>,
    /// `distances[trial][c]`; empty for failed trials.
    pub distances: Vec<Vec<f64>>,
    pub epsilon: f64,
    /// Trials with distance `< epsilon` at `n_max`.
    pub within: usize,
    pub fraction_within: f64,
    pub failures: Vec<(usize, String)>,
}

/// Tracks `d(β(μ_n), β(μ₀))` along `trials` independent sample paths of
/// length `n_max`, recorded at `checkpoints` (always including `n_max`).
pub fn iid_slln_trial(
    model: &IidModel,
    n_max: usize,
    trials: usize,
    seed: u64,
    epsilon: f64,
    checkpoints: &[usize],
) -> Result<SllnReport> {
    if n_max == 0 || trials == 0 {
        return Err(Error::input("n_max and trials must be positive"));
    }
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::input("epsilon must be positive"));
    }
    let mut cps: Vec<usize> = checkpoints.iter().copied().filter(|&c| c >= 1 && c <= n_max).collect();
    cps.push(n_max);
    cps.sort_unstable();
    cps.dedup();

    let target = model.base_value()?;
    let dist = sampler(model)?;
    let k = model.k();
    let paths: Vec<Result<Vec<f64>>> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = stream(seed, trial);
            let mut counts = vec![0; k];
            let mut out = Vec::with_capacity(cps.len());
            let mut drawn = 0;
            for &c in &cps {
                while drawn < c {
                    counts[dist.sample(&mut rng)] += 1;
                    drawn += 1;
                }
                let v = model.value_of_counts(&counts)?;
                out.push(model.space().dist(&v, &target)?);
            }
            Ok(out)
        })
        .collect();

    let mut distances = Vec::with_capacity(trials);
    let mut failures = Vec::new();
    for (i, p) in paths.into_iter().enumerate() {
        match p {
            Ok(d) => distances.push(d),
            Err(e) => {
                failures.push((i, e.to_string()));
                distances.push(Vec::new());
            }
        }
    }
    let ok: Vec<&Vec<f64>> = distances.iter().filter(|d| !d.is_empty()).collect();
    let mut median = Vec::with_capacity(cps.len());
    let mut max = Vec::with_capacity(cps.len());
    for c in 0..cps.len() {
        let mut col: Vec<f64> = ok.iter().map(|d| d[c]).collect();
        col.sort_by(f64::total_cmp);
        median.push(median_of_sorted(&col));
        max.push(col.last().copied().unwrap_or(f64::NAN));
    }
    let last = cps.len() - 1;
    let within = ok.iter().filter(|d| d[last] < epsilon).count();
    Ok(SllnReport {
        checkpoints: cps,
        median,
        max,
        distances,
        epsilon,
        within,
        fraction_within: within as f64 / trials as f64,
        failures,
    })
}

fn median_of_sorted(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => xs[n / 2],
        n => 0.5 * (xs[n / 2 - 1] + xs[n / 2]),
    }
}
