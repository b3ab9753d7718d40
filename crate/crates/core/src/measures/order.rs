use crate::error::{Error, Result};
use crate::geometry::{loewner_leq, Order};

use super::DiscreteMeasure;

const MAX_DENOMINATOR: usize = 64;

/// Stochastic order `μ ≤ ν` for uniform measures on equally many atoms:
/// true iff some permutation `σ` has `a_j ≤ b_σ(j)` for every `j`.
///
/// Measures are expanded to atom lists (repeated points allowed) with a
/// common denominator of at most 64; other weights are unsupported.
pub fn stochastic_leq_uniform(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<bool> {
    if mu.space() != nu.space() {
        return Err(Error::input("stochastic order between measures on different spaces"));
    }
    if mu.space().order() != Order::Loewner {
        return Err(Error::unsupported(format!(
            "{} carries no partial order",
            mu.space().name()
        )));
    }
    let (Some(nm), Some(nn)) = (
        mu.uniform_denominator(MAX_DENOMINATOR),
        nu.uniform_denominator(MAX_DENOMINATOR),
    ) else {
        return Err(Error::unsupported(
            "stochastic order is implemented only for uniform atom lists",
        ));
    };
    let count = lcm(nm, nn);
    let (Some(a), Some(b)) = (mu.as_uniform_list(count), nu.as_uniform_list(count)) else {
        return Err(Error::unsupported("no common uniform atom list"));
    };
    let mut edges = vec![Vec::new(); count];
    for (j, x) in a.iter().enumerate() {
        for (k, y) in b.iter().enumerate() {
            if loewner_leq(x, y)? {
                edges[j].push(k);
            }
        }
    }
    Ok(perfect_matching(&edges, count))
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// Kuhn's augmenting-path bipartite matching.
fn perfect_matching(edges: &[Vec<usize>], right_size: usize) -> bool {
    fn augment(u: usize, edges: &[Vec<usize>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for &v in &edges[u] {
            if seen[v] {
                continue;
            }
            seen[v] = true;
            if owner[v].is_none_or(|w| augment(w, edges, seen, owner)) {
                owner[v] = Some(u);
                return true;
            }
        }
        false
    }
    let mut owner = vec![None; right_size];
    (0..edges.len()).all(|u| {
        let mut seen = vec![false; right_size];
        augment(u, edges, &mut seen, &mut owner)
    })
}
