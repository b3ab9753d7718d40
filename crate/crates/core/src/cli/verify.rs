//! Re-derives the cheap invariants embedded in a report.

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use super::config::ExperimentConfig;
use super::run::{barycenter_residual, block_spread, plan_cost, MAPDIST_CAP, MASS_CHECK, RESIDUAL_CHECK};
use super::LIBRARY;
use crate::barycenters::map_distance_on_tuples;
use crate::condexp::{FiniteProbabilitySpace, RandomVariable};
use crate::ergodic::{Transformation, CYCLE_TOL};
use crate::geometry::Point;
use crate::ldp::{relative_entropy, wilson_interval};

/// Relative tolerance for quantities recomputed from stored numbers.
const RECOMPUTE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verification {
    pub ok: bool,
    pub failures: Vec<String>,
}

struct Verifier {
    failures: Vec<String>,
}

impl Verifier {
    fn require(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    fn close(&mut self, name: &str, stored: f64, recomputed: f64, tol: f64) {
        let ok = stored == recomputed || (stored - recomputed).abs() <= tol * recomputed.abs().max(1.0);
        self.require(ok, || format!("{name}: stored {stored:e}, recomputed {recomputed:e}"));
    }

    fn fail(&mut self, msg: impl Into<String>) {
        self.failures.push(msg.into());
    }
}

/// Stored floats; `null` stands for a non-finite value.
fn num(v: &Value) -> Option<f64> {
    match v {
        Value::Null => Some(f64::INFINITY),
        other => other.as_f64(),
    }
}

fn nums(v: &Value) -> Option<Vec<f64>> {
    v.as_array()?.iter().map(num).collect()
}

fn parse<T: DeserializeOwned>(v: &Value) -> Option<T> {
    serde_json::from_value(v.clone()).ok()
}

/// `(Σ_ω P(ω) d_ω^p)^{1/p}`.
fn bd_p(weights: &[f64], d: &[f64], p: f64) -> f64 {
    let s: f64 = weights.iter().zip(d).map(|(w, x)| w * x.powf(p)).sum();
    s.powf(1.0 / p)
}

/// Checks a report given as JSON text.
pub fn verify_report(text: &str) -> Verification {
    let mut v = Verifier { failures: Vec::new() };
    match serde_json::from_str::<Value>(text) {
        Ok(report) => verify_value(&report, &mut v),
        Err(e) => v.fail(format!("report is not JSON: {e}")),
    }
    Verification {
        ok: v.failures.is_empty(),
        failures: v.failures,
    }
}

fn verify_value(report: &Value, v: &mut Verifier) {
    v.require(report["library"] == LIBRARY, || "library field missing or foreign".into());
    let Some(config) = parse::<ExperimentConfig>(&report["config"]) else {
        v.fail("embedded config does not parse");
        return;
    };
    v.require(report["kind"] == config.kind().as_str(), || "kind does not match the config".into());
    v.require(
        !config.is_randomized() || config.seed().is_some(),
        || "randomized experiment without a seed".into(),
    );

    let mut all = true;
    match report["checks"].as_array() {
        Some(checks) => {
            for c in checks {
                let (Some(value), Some(bound), Some(pass)) = (num(&c["value"]), num(&c["bound"]), c["pass"].as_bool())
                else {
                    v.fail("malformed check entry");
                    continue;
                };
                let name = c["name"].as_str().unwrap_or("?").to_string();
                v.require(pass == (value <= bound), || format!("check {name} is inconsistent"));
                all &= pass;
            }
        }
        None => v.fail("checks missing"),
    }
    v.require(report["pass"].as_bool() == Some(all), || "overall pass flag is inconsistent".into());

    let result = &report["result"];
    match &config {
        ExperimentConfig::Wasserstein(c) => {
            let plan: Option<Vec<Vec<f64>>> = parse(&result["plan"]["plan"]);
            let (Some(plan), Some(distance)) = (plan, num(&result["distance"])) else {
                return v.fail("wasserstein result is malformed");
            };
            let stub = crate::measures::TransportPlan {
                p: c.p,
                plan: plan.clone(),
                cost: 0.0,
                row_potentials: None,
                col_potentials: None,
                pivots: 0,
            };
            let err = stub.marginal_error(c.mu.weights(), c.nu.weights());
            v.require(err <= MASS_CHECK, || format!("plan marginals off by {err:e}"));
            match plan_cost(&c.mu, &c.nu, &plan, c.p) {
                Ok(cost) => v.close("transport cost", distance.powf(c.p), cost, 1e-9),
                Err(e) => v.fail(format!("plan cost: {e}")),
            }
        }
        ExperimentConfig::Barycenter(c) => {
            let Some(x) = parse::<Point>(&result["value"]) else {
                return v.fail("barycenter value is malformed");
            };
            if c.measure.space().contains(&x).is_err() {
                v.fail("barycenter lies outside the space");
            }
            match barycenter_residual(&c.map, &x, &c.measure) {
                Ok(Some(r)) => v.require(r <= RESIDUAL_CHECK, || format!("first-order residual {r:e}")),
                Ok(None) => {}
                Err(e) => v.fail(format!("residual: {e}")),
            }
        }
        ExperimentConfig::Condexp(c) => {
            let Some(e) = parse::<RandomVariable>(&result["expectation"]) else {
                return v.fail("expectation is malformed");
            };
            match block_spread(e.values(), &c.partition, c.phi.space()) {
                Ok(s) => v.require(s == 0.0, || format!("expectation varies inside a block by {s:e}")),
                Err(err) => v.fail(err.to_string()),
            }
            if let Some(laws) = result["conditional_laws"].as_array() {
                v.require(laws.len() == c.probability.len(), || "one conditional law per atom expected".into());
                for law in laws {
                    match nums(&law["law"]["weights"]) {
                        Some(w) => {
                            let total: f64 = w.iter().sum();
                            v.require((total - 1.0).abs() <= MASS_CHECK, || format!("conditional law sums to {total}"));
                        }
                        None => v.fail("conditional law is malformed"),
                    }
                }
            }
            if c.sturm {
                match parse::<RandomVariable>(&result["sturm"]) {
                    Some(s) => match block_spread(s.values(), &c.partition, c.phi.space()) {
                        Ok(sp) => v.require(sp == 0.0, || "variational expectation is not block constant".into()),
                        Err(err) => v.fail(err.to_string()),
                    },
                    None => v.fail("variational expectation is malformed"),
                }
            }
        }
        ExperimentConfig::Martingale(c) => {
            let conv = &result["convergence"];
            let (Some(series), Some(per)) = (nums(&conv["series"]), parse::<Vec<Vec<f64>>>(&conv["per_omega"])) else {
                return v.fail("convergence report is malformed");
            };
            v.require(series.len() == per.len(), || "series and per-omega table differ in length".into());
            for (k, (s, d)) in series.iter().zip(&per).enumerate() {
                v.close(&format!("s_{k}"), *s, bd_p(c.probability.weights(), d, c.p), RECOMPUTE_TOL);
            }
            v.require(series.last() == Some(&0.0), || "terminal distance is not zero".into());
        }
        ExperimentConfig::Ergodic(c) => verify_ergodic(c, &c.probability, result, v),
        ExperimentConfig::Semiflow(c) => {
            let Some(values) = parse::<Vec<Point>>(&result["values"]) else {
                return v.fail("semiflow values are malformed");
            };
            v.require(values.len() == c.ts.len(), || "one value per t expected".into());
            if c.limit {
                let lambda = parse::<Point>(&result["canonical_barycenter"]);
                let distances = nums(&result["limit"]["distances"]);
                let (Some(lambda), Some(distances)) = (lambda, distances) else {
                    return v.fail("limit report is malformed");
                };
                for (i, (x, d)) in values.iter().zip(&distances).enumerate() {
                    match c.measure.space().dist(x, &lambda) {
                        Ok(r) => v.close(&format!("limit distance {i}"), *d, r, RECOMPUTE_TOL),
                        Err(e) => v.fail(e.to_string()),
                    }
                }
            }
        }
        ExperimentConfig::Mapdist(c) => {
            let Some(lb) = num(&result["lower_bound"]) else {
                return v.fail("lower bound missing");
            };
            v.require(lb <= MAPDIST_CAP, || format!("lower bound {lb} exceeds 1"));
            if let Some(w) = parse::<Vec<Point>>(&result["witness"]) {
                match map_distance_on_tuples(&c.left, &c.right, &c.space, &[w]) {
                    Ok(r) => v.close("witness ratio", lb, r.lower_bound, 1e-9),
                    Err(e) => v.fail(format!("witness: {e}")),
                }
            } else {
                v.require(lb == 0.0, || "positive bound without a witness".into());
            }
        }
        ExperimentConfig::Ldp(c) => verify_ldp(c, result, v),
        ExperimentConfig::Audit(_) => {
            let (Some(maxv), Some(th)) = (num(&result["max_violation"]), num(&result["threshold"])) else {
                return v.fail("audit report is malformed");
            };
            let failures = result["failures"].as_array().map_or(usize::MAX, Vec::len);
            let pass = result["pass"].as_bool();
            v.require(pass == Some(failures == 0 && maxv <= th), || "audit pass flag is inconsistent".into());
        }
    }
}

fn verify_ergodic(c: &super::ErgodicConfig, prob: &FiniteProbabilitySpace, result: &Value, v: &mut Verifier) {
    let conv = &result["convergence"];
    let (Some(per), Some(agg), Some(max_at)) = (
        parse::<Vec<Vec<Option<f64>>>>(&conv["per_omega"]),
        nums(&conv["aggregate"]),
        num(&conv["max_at_cycles"]),
    ) else {
        return v.fail("ergodic report is malformed");
    };
    let per: Vec<Vec<f64>> = per
        .into_iter()
        .map(|r| r.into_iter().map(|x| x.unwrap_or(f64::INFINITY)).collect())
        .collect();
    let t = match Transformation::new(c.transformation.clone(), prob) {
        Ok(t) => t,
        Err(e) => return v.fail(e.to_string()),
    };
    for (i, a) in agg.iter().enumerate() {
        let column: Vec<f64> = per.iter().map(|row| row[i]).collect();
        v.close(&format!("bd_p at n = {}", i + 1), *a, bd_p(prob.weights(), &column, c.p), RECOMPUTE_TOL);
    }
    let mut worst = 0.0_f64;
    for (w, row) in per.iter().enumerate() {
        if prob.weight(w) == 0.0 {
            continue;
        }
        let len = t.orbit_length(w);
        for n in (len..=row.len()).step_by(len) {
            worst = worst.max(row[n - 1]);
        }
    }
    v.close("max distance at cycles", max_at, worst, RECOMPUTE_TOL);
    v.require(worst <= CYCLE_TOL, || format!("distance {worst:e} at a full orbit"));
}

fn verify_ldp(c: &super::LdpConfig, result: &Value, v: &mut Verifier) {
    let report = &result["report"];
    let Some(rows) = report["rows"].as_array() else {
        return v.fail("ldp rows missing");
    };
    let rate = &report["rate_inf"];
    let Some(rate_value) = num(&rate["value"]) else {
        return v.fail("rate estimate missing");
    };
    if let Some(p) = nums(&rate["witness"]) {
        match relative_entropy(&p, c.model.weights()) {
            Ok(s) => v.close("rate witness entropy", rate_value, s, RECOMPUTE_TOL),
            Err(e) => v.fail(e.to_string()),
        }
    }
    v.require(rows.len() == c.ns.len(), || "one row per n expected".into());
    for (row, &n) in rows.iter().zip(&c.ns) {
        let (Some(p), Some(total), Some(a_n), Some(gap)) = (
            num(&row["probability"]),
            num(&row["total_probability"]),
            num(&row["a_n"]),
            num(&row["gap"]),
        ) else {
            v.fail("malformed ldp row");
            continue;
        };
        v.require(row["n"].as_u64() == Some(n as u64), || format!("row for n = {n} is mislabeled"));
        v.require((0.0..=1.0).contains(&p), || format!("P_{n} = {p} is not a probability"));
        v.require((total - 1.0).abs() <= MASS_CHECK, || format!("probabilities for n = {n} sum to {total}"));
        let expected = if p > 0.0 { -p.ln() / n as f64 } else { f64::INFINITY };
        v.close(&format!("a_{n}"), a_n, expected, RECOMPUTE_TOL);
        if a_n.is_finite() && rate_value.is_finite() {
            v.close(&format!("gap at n = {n}"), gap, (a_n - rate_value).abs(), RECOMPUTE_TOL);
        }
    }
    let mc = &result["monte_carlo"];
    if !mc.is_null() {
        let hits = mc["hits"].as_u64().map(|h| h as usize);
        let samples = mc["samples"].as_u64().map(|s| s as usize);
        let (Some(hits), Some(samples), Some(est), Some(lo), Some(hi)) =
            (hits, samples, num(&mc["estimate"]), num(&mc["lower"]), num(&mc["upper"]))
        else {
            return v.fail("monte carlo block is malformed");
        };
        v.close("monte carlo estimate", est, hits as f64 / samples.max(1) as f64, RECOMPUTE_TOL);
        match wilson_interval(hits, samples) {
            Ok((l, h)) => {
                v.close("wilson lower", lo, l, RECOMPUTE_TOL);
                v.close("wilson upper", hi, h, RECOMPUTE_TOL);
            }
            Err(e) => v.fail(e.to_string()),
        }
    }
}
