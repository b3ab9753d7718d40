use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const BISECTION_TOL: f64 = 1e-12;
const BISECTION_MAX_ITER: usize = 200;

/// Uniform convexity constant `k_q` of a global NPC space, with the root
/// `τ_q` it is built from (`τ_2` is reported as 1, unused).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvexityConstant {
    pub q: f64,
    pub tau_q: f64,
    pub k_q: f64,
}

fn tau_polynomial(q: f64, x: f64) -> f64 {
    x.powf(q - 1.0) + (1.0 - q) * x + 2.0 - q
}

/// `k_2 = 2`; for `q > 2`, `τ_q` is the root in `(1, ∞)` of
/// `x^{q-1} + (1-q)x + 2 - q` and `k_q = (8/2^q)(1+τ^{q-1})/(1+τ)^{q-1}`.
pub fn convexity_constant(q: f64) -> Result<ConvexityConstant> {
    if !q.is_finite() || q < 2.0 {
        return Err(Error::input(format!("convexity exponent must be >= 2, got {q}")));
    }
    if q == 2.0 {
        return Ok(ConvexityConstant {
            q,
            tau_q: 1.0,
            k_q: 2.0,
        });
    }
    // The polynomial is negative just right of 1 and grows like x^{q-1}.
    let mut lo = 1.0;
    let mut hi = 2.0;
    while tau_polynomial(q, hi) <= 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..BISECTION_MAX_ITER {
        if hi - lo <= BISECTION_TOL * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if tau_polynomial(q, mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let tau = 0.5 * (lo + hi);
    let k = 8.0 / 2f64.powf(q) * (1.0 + tau.powf(q - 1.0)) / (1.0 + tau).powf(q - 1.0);
    Ok(ConvexityConstant { q, tau_q: tau, k_q: k })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_two_is_exact() {
        let c = convexity_constant(2.0).unwrap();
        assert_eq!(c.k_q, 2.0);
    }

    #[test]
    fn q_four_root_is_two() {
        // x^3 - 3x - 2 = (x - 2)(x + 1)^2
        let c = convexity_constant(4.0).unwrap();
        assert!((c.tau_q - 2.0).abs() < 1e-11);
        assert!((c.k_q - 1.0 / 6.0).abs() < 1e-11);
    }

    #[test]
    fn q_six_root_bracketed() {
        let c = convexity_constant(6.0).unwrap();
        assert!(c.tau_q > 1.6 && c.tau_q < 1.7);
        assert!(tau_polynomial(6.0, c.tau_q).abs() < 1e-10);
        // Frozen from a 30-digit root of x^5 - 5x - 4 computed outside this crate.
        assert!((c.tau_q - 1.650_629_191_439_388).abs() < 1e-11);
        assert!((c.k_q - 0.012_661_469_440_691_406).abs() < 1e-12);
    }

    #[test]
    fn rejects_small_q() {
        assert!(convexity_constant(1.5).is_err());
    }
}
