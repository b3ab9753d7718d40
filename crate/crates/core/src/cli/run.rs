use serde::Serialize;
use serde_json::{json, Value};

use super::config::*;
use super::{Check, Series};
use crate::barycenters::{
    canonical_npc, contractivity_audit, karcher_residual, map_distance_lower_bound, monotonicity_audit,
    semiflow_fixed_point, semiflow_limit_report, BarycentricMap,
};
use crate::condexp::{
    associativity_probe, beta_conditional_expectation, beta_expectation, disintegrate, sturm_conditional_expectation,
    FiniteProbabilitySpace, Partition, RandomVariable,
};
use crate::ergodic::{ergodic_convergence_report, ergodic_limit, Transformation, CYCLE_TOL};
use crate::error::{Error, Result};
use crate::geometry::{Geometry, Point, Space};
use crate::ldp::{event_probability, iid_slln_trial, ldp_gap_report, monte_carlo_event_probability, MAX_SAMPLE_SIZE};
use crate::martingales::{martingale_convergence_report, Direction};
use crate::measures::{wasserstein, DiscreteMeasure};

/// Marginal and probability-sum tolerance.
pub(crate) const MASS_CHECK: f64 = 1e-10;
/// Karcher residual required of a reported SPD barycenter.
pub(crate) const RESIDUAL_CHECK: f64 = 1e-10;
pub(crate) const STURM_CHECK: f64 = 1e-8;
pub(crate) const MAPDIST_CAP: f64 = 1.0 + 1e-9;
pub(crate) const IDENTITY_CHECK: f64 = 1e-10;

type Executed = (Value, Vec<Check>, Option<Series>);

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("results serialize")
}

pub(super) fn execute(config: &ExperimentConfig) -> Result<Executed> {
    match config {
        ExperimentConfig::Wasserstein(c) => run_wasserstein(c),
        ExperimentConfig::Barycenter(c) => run_barycenter(c),
        ExperimentConfig::Condexp(c) => run_condexp(c),
        ExperimentConfig::Martingale(c) => run_martingale(c),
        ExperimentConfig::Ergodic(c) => run_ergodic(c),
        ExperimentConfig::Semiflow(c) => run_semiflow(c),
        ExperimentConfig::Mapdist(c) => run_mapdist(c, config.require_seed()?),
        ExperimentConfig::Ldp(c) => {
            let seed = if config.is_randomized() { Some(config.require_seed()?) } else { None };
            run_ldp(c, seed)
        }
        ExperimentConfig::Audit(c) => run_audit(c, config.require_seed()?),
    }
}

/// `Σ π_ij d(x_i, y_j)^p` recomputed from the plan.
pub(crate) fn plan_cost(mu: &DiscreteMeasure, nu: &DiscreteMeasure, plan: &[Vec<f64>], p: f64) -> Result<f64> {
    let mut cost = 0.0;
    for (i, row) in plan.iter().enumerate() {
        for (j, &m) in row.iter().enumerate() {
            let (Some(x), Some(y)) = (mu.points().get(i), nu.points().get(j)) else {
                return Err(Error::input("plan shape does not match the measures"));
            };
            if m != 0.0 {
                cost += m * mu.space().dist(x, y)?.powf(p);
            }
        }
    }
    Ok(cost)
}

fn run_wasserstein(c: &WassersteinConfig) -> Result<Executed> {
    let (distance, plan) = wasserstein(c.p, &c.mu, &c.nu)?;
    let marginal = plan.marginal_error(c.mu.weights(), c.nu.weights());
    let cost = plan_cost(&c.mu, &c.nu, &plan.plan, c.p)?;
    let checks = vec![
        Check::new("plan_marginal_error", marginal, MASS_CHECK),
        Check::new("cost_consistency", (cost - distance.powf(c.p)).abs(), 1e-9 * cost.max(1.0)),
    ];
    Ok((json!({ "distance": distance, "plan": to_value(&plan) }), checks, None))
}

/// Norm of the first-order condition at `x` for the maps whose optimality
/// condition is cheap to state.
pub(crate) fn barycenter_residual(map: &BarycentricMap, x: &Point, mu: &DiscreteMeasure) -> Result<Option<f64>> {
    match (map, mu.space().geometry()) {
        (BarycentricMap::Karcher { .. }, _) | (BarycentricMap::CanonicalNpc { .. }, Geometry::SpdTrace(_)) => {
            karcher_residual(x, mu).map(Some)
        }
        (BarycentricMap::Arithmetic | BarycentricMap::CanonicalNpc { .. }, Geometry::Euclidean(_)) => {
            let xv = x.as_vector().ok_or_else(|| Error::input("expected a vector"))?;
            let mut g = xv * 0.0;
            for (a, w) in mu.atoms() {
                g += (xv - a.as_vector().expect("euclidean atom")) * w;
            }
            Ok(Some(g.norm() / mu.support_diameter()?.max(1.0)))
        }
        _ => Ok(None),
    }
}

fn run_barycenter(c: &BarycenterConfig) -> Result<Executed> {
    let value = c.map.evaluate(&c.measure)?;
    let residual = barycenter_residual(&c.map, &value, &c.measure)?;
    let mut checks = Vec::new();
    if let Some(r) = residual {
        checks.push(Check::new("first_order_residual", r, RESIDUAL_CHECK));
    }
    Ok((json!({ "map": c.map.name(), "value": to_value(&value), "residual": residual }), checks, None))
}

/// Largest `d(E(ω), E(ω'))` over pairs in a common block.
pub(crate) fn block_spread(values: &[Point], partition: &Partition, space: &Space) -> Result<f64> {
    let mut worst = 0.0_f64;
    for block in partition.blocks() {
        let first = &values[block[0]];
        for &w in &block[1..] {
            worst = worst.max(space.dist(first, &values[w])?);
        }
    }
    Ok(worst)
}

fn max_gap(a: &RandomVariable, b: &RandomVariable, prob: &FiniteProbabilitySpace) -> Result<f64> {
    let mut worst = 0.0_f64;
    for w in 0..prob.len() {
        if prob.weight(w) > 0.0 {
            worst = worst.max(a.space().dist(a.value(w), b.value(w))?);
        }
    }
    Ok(worst)
}

fn run_condexp(c: &CondexpConfig) -> Result<Executed> {
    let e = beta_conditional_expectation(&c.map, &c.phi, &c.probability, &c.partition)?;
    let laws = disintegrate(&c.probability, &c.partition)?;
    let spread = block_spread(e.values(), &c.partition, c.phi.space())?;
    let mut checks = vec![Check::new("block_constancy", spread, 0.0)];
    let mut result = json!({
        "expectation": to_value(&e),
        "conditional_laws": to_value(&laws),
    });
    if c.sturm {
        let s = sturm_conditional_expectation(&c.phi, &c.probability, &c.partition)?;
        let lambda = beta_conditional_expectation(&BarycentricMap::canonical_npc(), &c.phi, &c.probability, &c.partition)?;
        let gap = max_gap(&s, &lambda, &c.probability)?;
        result["sturm"] = to_value(&s);
        result["sturm_gap"] = json!(gap);
        checks.push(Check::new("sturm_agreement", gap, STURM_CHECK));
    }
    if let Some(coarse) = &c.coarse {
        let probe = associativity_probe(&c.map, &c.phi, &c.probability, coarse, &c.partition, c.p)?;
        result["associativity"] = to_value(&probe);
    }
    Ok((result, checks, None))
}

fn run_martingale(c: &MartingaleConfig) -> Result<Executed> {
    let report = martingale_convergence_report(&c.map, &c.phi, &c.probability, &c.filtration, c.p)?;
    let mut result = json!({ "convergence": to_value(&report) });
    let terminal = *report.series.last().expect("nonempty filtration");
    let mut checks = vec![Check::new("terminal_distance", terminal, 0.0)];
    if c.filtration.direction() == Direction::Decreasing && c.filtration.limit().is_trivial() {
        let target = beta_expectation(&c.map, &c.phi, &c.probability)?;
        let last = beta_conditional_expectation(&c.map, &c.phi, &c.probability, c.filtration.limit())?;
        let d = c.phi.space().dist(last.value(0), &target)?;
        result["expectation"] = to_value(&target);
        checks.push(Check::new("terminal_equals_expectation", d, 1e-12));
    }
    let series = Series {
        header: vec!["k".into(), "s_k".into()],
        rows: report.series.iter().enumerate().map(|(k, s)| vec![k as f64, *s]).collect(),
    };
    Ok((result, checks, Some(series)))
}

fn run_ergodic(c: &ErgodicConfig) -> Result<Executed> {
    let t = Transformation::new(c.transformation.clone(), &c.probability)?;
    let gamma = ergodic_limit(&c.map, &c.phi, &c.probability, &t)?;
    let report = ergodic_convergence_report(&c.map, &c.phi, &c.probability, &t, c.p, c.n_max)?;
    let mut checks = vec![Check::new("max_distance_at_cycles", report.max_at_cycles, CYCLE_TOL)];
    let mut result = json!({
        "orbits": t.orbits(),
        "ergodic": t.is_ergodic(),
        "limit": to_value(&gamma),
        "convergence": to_value(&report),
    });
    if t.is_ergodic() {
        let e = beta_expectation(&c.map, &c.phi, &c.probability)?;
        let constant = RandomVariable::constant(*c.phi.space(), e.clone(), c.probability.len())?;
        let gap = max_gap(&gamma, &constant, &c.probability)?;
        result["expectation"] = to_value(&e);
        checks.push(Check::new("ergodic_limit_is_expectation", gap, CYCLE_TOL));
    }
    let mut header = vec!["n".to_string()];
    header.extend((0..c.probability.len()).map(|w| format!("omega_{w}")));
    header.push("bd_p".into());
    let rows = (0..c.n_max)
        .map(|i| {
            let mut row = vec![(i + 1) as f64];
            row.extend(report.per_omega.iter().map(|d| d[i]));
            row.push(report.aggregate[i]);
            row
        })
        .collect();
    Ok((result, checks, Some(Series { header, rows })))
}

fn run_semiflow(c: &SemiflowConfig) -> Result<Executed> {
    let space = *c.measure.space();
    let mut values = Vec::with_capacity(c.ts.len());
    for &t in &c.ts {
        values.push(semiflow_fixed_point(&c.map, t, &c.measure, c.tol)?);
    }
    let z = c.measure.points()[0].clone();
    let dirac = DiscreteMeasure::dirac(space, z.clone())?;
    let mut dirac_gap = 0.0_f64;
    for &t in &c.ts {
        dirac_gap = dirac_gap.max(space.dist(&semiflow_fixed_point(&c.map, t, &dirac, c.tol)?, &z)?);
    }
    let mut checks = vec![Check::new("dirac_identity", dirac_gap, IDENTITY_CHECK)];
    if let Some(k) = c.ts.iter().position(|&t| t == 1.0) {
        let direct = c.map.evaluate(&c.measure)?;
        checks.push(Check::new("unit_time_identity", space.dist(&values[k], &direct)?, IDENTITY_CHECK));
    }
    let mut result = json!({ "ts": c.ts, "values": to_value(&values) });
    let mut series = None;
    if c.limit {
        let limit = semiflow_limit_report(&c.map, &c.ts, &c.measure, c.tol)?;
        let lambda = canonical_npc(&c.measure, 1e-12, 200)?;
        let excess = limit
            .distances
            .iter()
            .zip(&limit.bounds)
            .map(|(d, b)| d - b)
            .fold(f64::NEG_INFINITY, f64::max);
        checks.push(Check::new("limit_bound_excess", excess, 0.0));
        checks.push(Check::holds("limit_distances_decreasing", limit.decreasing));
        series = Some(Series {
            header: vec!["t".into(), "distance".into(), "bound".into()],
            rows: (0..c.ts.len())
                .map(|i| vec![c.ts[i], limit.distances[i], limit.bounds[i]])
                .collect(),
        });
        result["canonical_barycenter"] = to_value(&lambda);
        result["limit"] = to_value(&limit);
    }
    Ok((result, checks, series))
}

fn run_mapdist(c: &MapdistConfig, seed: u64) -> Result<Executed> {
    let report = map_distance_lower_bound(&c.left, &c.right, &c.space, c.budget, seed, c.max_n)?;
    let checks = vec![Check::new("bounded_by_one", report.lower_bound, MAPDIST_CAP)];
    Ok((to_value(&report), checks, None))
}

fn run_ldp(c: &LdpConfig, seed: Option<u64>) -> Result<Executed> {
    let report = ldp_gap_report(&c.model, &c.event, &c.ns, c.grid_resolution)?;
    let worst_total = report
        .rows
        .iter()
        .map(|r| (r.total_probability - 1.0).abs())
        .fold(0.0, f64::max);
    let in_unit = report.rows.iter().all(|r| (0.0..=1.0).contains(&r.probability));
    let checks = vec![
        Check::new("total_probability_error", worst_total, MASS_CHECK),
        Check::holds("probabilities_in_unit_interval", in_unit),
    ];
    let mut result = json!({ "report": to_value(&report) });
    if let (Some(mc), Some(seed)) = (&c.monte_carlo, seed) {
        let est = monte_carlo_event_probability(&c.model, &c.event, mc.n, mc.samples, seed)?;
        let mut v = to_value(&est);
        if mc.n <= MAX_SAMPLE_SIZE {
            if let Ok(exact) = event_probability(&c.model, mc.n, &c.event) {
                v["exact"] = json!(exact);
                v["covers_exact"] = json!(est.contains(exact));
            }
        }
        result["monte_carlo"] = v;
    }
    if let (Some(s), Some(seed)) = (&c.slln, seed) {
        let r = iid_slln_trial(&c.model, s.n_max, s.trials, seed, s.epsilon, &s.checkpoints)?;
        result["slln"] = to_value(&r);
    }
    let series = Series {
        header: vec!["n".into(), "P_n".into(), "a_n".into(), "gap".into()],
        rows: report
            .rows
            .iter()
            .map(|r| vec![r.n as f64, r.probability, r.a_n, r.gap])
            .collect(),
    };
    Ok((result, checks, Some(series)))
}

fn run_audit(c: &AuditConfig, seed: u64) -> Result<Executed> {
    let report = match c.audit {
        AuditKind::Contractivity => contractivity_audit(&c.map, c.p, &c.space, c.trials, seed)?,
        AuditKind::Monotonicity => monotonicity_audit(&c.map, &c.space, c.trials, seed)?,
    };
    let checks = vec![
        Check::new("max_violation", report.max_violation, report.threshold),
        Check::new("failed_trials", report.failures.len() as f64, 0.0),
    ];
    Ok((to_value(&report), checks, None))
}
