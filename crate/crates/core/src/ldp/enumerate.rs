use serde::{Deserialize, Serialize};

use super::{pairwise_sum, rate_inf_over_event, Event, IidModel, RateEstimate};
use crate::error::{Error, Result};
use crate::geometry::Point;

pub const MAX_ATOMS: usize = 6;
pub const MAX_SAMPLE_SIZE: usize = 60;
pub const MAX_COMPOSITIONS: usize = 1_000_000;

/// All `m ∈ ℕ^k` with `Σ m_j = n`, in lexicographic order.
pub fn compositions(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(left: usize, slots: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if slots == 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in 0..=left {
            prefix.push(first);
            rec(left - first, slots - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if k > 0 {
        rec(n, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

/// `C(n + k - 1, k - 1)`, saturating.
fn composition_count(n: usize, k: usize) -> usize {
    let mut c: u128 = 1;
    for j in 1..k as u128 {
        c = c * (n as u128 + j) / j;
    }
    usize::try_from(c).unwrap_or(usize::MAX)
}

fn check_capacity(k: usize, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::input("sample size must be positive"));
    }
    if k > MAX_ATOMS || n > MAX_SAMPLE_SIZE {
        return Err(Error::capacity(format!(
            "exact enumeration supports K <= {MAX_ATOMS} atoms and n <= {MAX_SAMPLE_SIZE} (got K = {k}, n = {n})"
        )));
    }
    let count = composition_count(n, k);
    if count > MAX_COMPOSITIONS {
        return Err(Error::capacity(format!(
            "{count} compositions exceed the enumeration limit of {MAX_COMPOSITIONS}"
        )));
    }
    Ok(())
}

/// One outcome of `μ_n`: counts, probability and `β`-value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalEntry {
    pub composition: Vec<usize>,
    pub probability: f64,
    pub value: Point,
}

fn log_factorials(n: usize) -> Vec<f64> {
    let mut t = vec![0.0; n + 1];
    for k in 1..=n {
        t[k] = t[k - 1] + (k as f64).ln();
    }
    t
}

/// Exact law of `β(μ_n)`: `P(m) = n!/(Π m_j!) Π w_j^{m_j}` for every composition.
pub fn enumerate_empirical_distribution(model: &IidModel, n: usize) -> Result<Vec<EmpiricalEntry>> {
    check_capacity(model.k(), n)?;
    let comps = compositions(n, model.k());
    let lf = log_factorials(n);
    let log_w: Vec<f64> = model.weights().iter().map(|w| w.ln()).collect();
    let values = model.values_of_counts(&comps)?;
    Ok(comps
        .into_iter()
        .zip(values)
        .map(|(m, value)| {
            let mut log_p = lf[n];
            for (j, &c) in m.iter().enumerate() {
                log_p += c as f64 * log_w[j] - lf[c];
            }
            EmpiricalEntry {
                composition: m,
                probability: log_p.exp(),
                value,
            }
        })
        .collect())
}

fn event_probability_of(entries: &[EmpiricalEntry], model: &IidModel, event: &Event) -> Result<f64> {
    let mut hits = Vec::new();
    for e in entries {
        if event.holds(&e.value, model.space())? {
            hits.push(e.probability);
        }
    }
    Ok(pairwise_sum(&hits))
}

/// `P(β(μ_n) ∈ Γ)`, exactly up to rounding.
pub fn event_probability(model: &IidModel, n: usize, event: &Event) -> Result<f64> {
    let event = event.resolve(model)?;
    let entries = enumerate_empirical_distribution(model, n)?;
    event_probability_of(&entries, model, &event)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdpRow {
    pub n: usize,
    pub probability: f64,
    /// Sum of all outcome probabilities (1 up to rounding).
    pub total_probability: f64,
    /// `-(1/n) ln P_n`; infinite when `P_n = 0`.
    pub a_n: f64,
    /// `|a_n - inf I|`.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdpReport {
    pub rows: Vec<LdpRow>,
    pub rate_inf: RateEstimate,
    /// Smallest `C` with `gap_n ≤ C ln(n)/n` for every listed `n`.
    pub envelope_c: f64,
    pub gaps_strictly_decreasing: bool,
}

pub fn ldp_gap_report(model: &IidModel, event: &Event, ns: &[usize], grid_resolution: usize) -> Result<LdpReport> {
    let event = event.resolve(model)?;
    let rate_inf = rate_inf_over_event(model, &event, grid_resolution)?;
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let entries = enumerate_empirical_distribution(model, n)?;
        let probability = event_probability_of(&entries, model, &event)?;
        let total_probability = pairwise_sum(&entries.iter().map(|e| e.probability).collect::<Vec<_>>());
        let a_n = if probability > 0.0 {
            -probability.ln() / n as f64
        } else {
            f64::INFINITY
        };
        let gap = if a_n.is_finite() && rate_inf.value.is_finite() {
            (a_n - rate_inf.value).abs()
        } else if a_n == rate_inf.value {
            0.0
        } else {
            f64::INFINITY
        };
        rows.push(LdpRow {
            n,
            probability,
            total_probability,
            a_n,
            gap,
        });
    }
    let envelope_c = rows
        .iter()
        .filter(|r| r.n > 1)
        .map(|r| r.gap / ((r.n as f64).ln() / r.n as f64))
        .fold(0.0_f64, f64::max);
    let gaps_strictly_decreasing = rows.windows(2).all(|w| w[1].gap < w[0].gap);
    Ok(LdpReport {
        rows,
        rate_inf,
        envelope_c,
        gaps_strictly_decreasing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composition_enumeration() {
        assert_eq!(compositions(2, 2), vec![vec![0, 2], vec![1, 1], vec![2, 0]]);
        assert_eq!(compositions(5, 3).len(), composition_count(5, 3));
        assert_eq!(composition_count(60, 6), 8_259_888);
    }

    #[test]
    fn coin_with_two_tosses() {
        let m = IidModel::fair_coin();
        let e = enumerate_empirical_distribution(&m, 2).unwrap();
        let probs: Vec<f64> = e.iter().map(|x| x.probability).collect();
        assert!((probs[0] - 0.25).abs() < 1e-15 && (probs[1] - 0.5).abs() < 1e-15);
        assert_eq!(e[1].value, Point::scalar(0.5).unwrap());
        assert_eq!(e[0].value, Point::scalar(1.0).unwrap());
    }

    #[test]
    fn single_draw() {
        let m = IidModel::fair_coin();
        let e = enumerate_empirical_distribution(&m, 1).unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(e[0].composition, vec![0, 1]);
        assert!((e[0].probability - 0.5).abs() < 1e-15);
    }

    #[test]
    fn capacity_limits() {
        let m = IidModel::fair_coin();
        assert!(matches!(enumerate_empirical_distribution(&m, 61), Err(Error::Capacity(_))));
        assert!(matches!(enumerate_empirical_distribution(&m, 0), Err(Error::Input(_))));
    }

    #[test]
    fn always_has_probability_one() {
        let m = IidModel::fair_coin();
        let p = event_probability(&m, 17, &Event::Always).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
    }
}
