//! Exact transportation problems by the network simplex method on the
//! complete bipartite graph rows × columns.
//!
//! The basis is a spanning tree with `m + n - 1` cells, started from the
//! north-west corner rule. Entering cells follow Dantzig's rule with ties
//! broken by the lowest `(row, col)`; the leaving cell is the first
//! minimal-flow cell on the cycle. Optimality is certified by
//! complementary slackness against the final dual potentials.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Optimality tolerance on reduced costs, relative to `max(1, max cost)`.
pub const REDUCED_COST_TOL: f64 = 1e-11;

#[derive(Debug, Clone)]
pub(crate) struct TransportSolution {
    /// Row-major `m × n` flow matrix.
    pub flow: Vec<f64>,
    pub cost: f64,
    pub row_potentials: Vec<f64>,
    pub col_potentials: Vec<f64>,
    pub pivots: usize,
}

struct Tree {
    m: usize,
    n: usize,
    basis: Vec<(usize, usize)>,
}

impl Tree {
    fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        // Nodes 0..m are rows, m..m+n columns; payload = (neighbour, basis index).
        let mut adj = vec![Vec::new(); self.m + self.n];
        for (k, &(i, j)) in self.basis.iter().enumerate() {
            adj[i].push((self.m + j, k));
            adj[self.m + j].push((i, k));
        }
        adj
    }

    fn potentials(&self, cost: &[f64], adj: &[Vec<(usize, usize)>]) -> Result<(Vec<f64>, Vec<f64>)> {
        let (m, n) = (self.m, self.n);
        let mut pot = vec![f64::NAN; m + n];
        pot[0] = 0.0;
        let mut queue = VecDeque::from([0usize]);
        let mut seen = 1;
        while let Some(node) = queue.pop_front() {
            for &(next, k) in &adj[node] {
                if pot[next].is_nan() {
                    let (i, j) = self.basis[k];
                    pot[next] = cost[i * n + j] - pot[node];
                    seen += 1;
                    queue.push_back(next);
                }
            }
        }
        if seen != m + n {
            return Err(Error::domain("transport basis is not a spanning tree"));
        }
        Ok((pot[..m].to_vec(), pot[m..].to_vec()))
    }

    /// Basis indices on the tree path from column `j` to row `i`, in order.
    fn path(&self, adj: &[Vec<(usize, usize)>], i: usize, j: usize) -> Vec<usize> {
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; self.m + self.n];
        let mut visited = vec![false; self.m + self.n];
        visited[i] = true;
        let mut queue = VecDeque::from([i]);
        let target = self.m + j;
        while let Some(node) = queue.pop_front() {
            if node == target {
                break;
            }
            for &(next, k) in &adj[node] {
                if !visited[next] {
                    visited[next] = true;
                    parent[next] = Some((node, k));
                    queue.push_back(next);
                }
            }
        }
        let mut edges = Vec::new();
        let mut node = target;
        while let Some((prev, k)) = parent[node] {
            edges.push(k);
            node = prev;
        }
        edges
    }
}

/// Minimizes `Σ c_ij π_ij` over couplings of the probability vectors `a`, `b`.
pub(crate) fn solve(a: &[f64], b: &[f64], cost: &[f64]) -> Result<TransportSolution> {
    let (m, n) = (a.len(), b.len());
    if m == 0 || n == 0 || cost.len() != m * n {
        return Err(Error::input("transport problem with inconsistent sizes"));
    }
    let scale = cost.iter().fold(1.0_f64, |s, c| s.max(c.abs()));
    let tol = REDUCED_COST_TOL * scale;

    let mut flow = vec![0.0; m * n];
    let mut basic = vec![false; m * n];
    let mut tree = Tree {
        m,
        n,
        basis: Vec::with_capacity(m + n - 1),
    };

    // North-west corner start.
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (a[0], b[0]);
    loop {
        let x = ra.min(rb).max(0.0);
        flow[i * n + j] = x;
        basic[i * n + j] = true;
        tree.basis.push((i, j));
        ra -= x;
        rb -= x;
        if i == m - 1 && j == n - 1 {
            break;
        }
        let advance_row = if i == m - 1 {
            false
        } else if j == n - 1 {
            true
        } else {
            ra < rb
        };
        if advance_row {
            i += 1;
            ra = a[i];
        } else {
            j += 1;
            rb = b[j];
        }
    }

    let max_pivots = 10_000 + 50 * m * n;
    let mut pivots = 0;
    loop {
        let adj = tree.adjacency();
        let (u, v) = tree.potentials(cost, &adj)?;

        let mut entering: Option<(usize, usize)> = None;
        let mut best = -tol;
        for r in 0..m {
            for c in 0..n {
                if basic[r * n + c] {
                    continue;
                }
                let reduced = cost[r * n + c] - u[r] - v[c];
                if reduced < best {
                    best = reduced;
                    entering = Some((r, c));
                }
            }
        }
        let Some((ei, ej)) = entering else {
            let solution = finish(flow, cost, u, v, pivots, n, tol)?;
            return Ok(solution);
        };

        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::convergence(
                "network simplex",
                pivots,
                best.abs(),
                Vec::new(),
                None,
            ));
        }

        // Cycle: entering (+), then alternating -, +, ... along the tree path.
        let path = tree.path(&adj, ei, ej);
        let mut theta = f64::INFINITY;
        let mut leaving = usize::MAX;
        for (step, &k) in path.iter().enumerate() {
            if step % 2 == 0 {
                let (r, c) = tree.basis[k];
                let f = flow[r * n + c];
                if f < theta {
                    theta = f;
                    leaving = k;
                }
            }
        }
        let theta = theta.max(0.0);
        flow[ei * n + ej] += theta;
        for (step, &k) in path.iter().enumerate() {
            let (r, c) = tree.basis[k];
            if step % 2 == 0 {
                flow[r * n + c] = (flow[r * n + c] - theta).max(0.0);
            } else {
                flow[r * n + c] += theta;
            }
        }
        let (lr, lc) = tree.basis[leaving];
        flow[lr * n + lc] = 0.0;
        basic[lr * n + lc] = false;
        basic[ei * n + ej] = true;
        tree.basis[leaving] = (ei, ej);
    }
}

fn finish(
    flow: Vec<f64>,
    cost: &[f64],
    u: Vec<f64>,
    v: Vec<f64>,
    pivots: usize,
    n: usize,
    tol: f64,
) -> Result<TransportSolution> {
    // Complementary slackness: dual feasibility everywhere, tightness on the support.
    for (idx, (&f, &c)) in flow.iter().zip(cost).enumerate() {
        let reduced = c - u[idx / n] - v[idx % n];
        if reduced < -tol || (f > 0.0 && reduced.abs() > tol) {
            return Err(Error::domain(format!(
                "transport optimality certificate failed at cell ({}, {}): reduced cost {reduced:e}",
                idx / n,
                idx % n
            )));
        }
    }
    let total = flow.iter().zip(cost).map(|(f, c)| f * c).sum();
    Ok(TransportSolution {
        flow,
        cost: total,
        row_potentials: u,
        col_potentials: v,
        pivots,
    })
}
