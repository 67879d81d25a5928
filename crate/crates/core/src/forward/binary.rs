use super::{ForwardSolution, SolveStatus};
use crate::domain::UtilityForm;
use crate::error::{Error, Result};

const MAX_TABLE: usize = 50_000_000;

/// On binaries `x_i² = x_i`, so the quadratic objective becomes the 0/1
/// knapsack `max Σ (θ_i − ½P_ii) x_i` with integer prices. Ties prefer
/// fewer items.
pub fn solve_binary_knapsack(theta: &[f64], p_diag: &[f64], prices: &[f64], budget: f64) -> Result<ForwardSolution> {
    let n = theta.len();
    let mut weights = Vec::with_capacity(n);
    for &p in prices {
        let r = p.round();
        if (p - r).abs() > 1e-9 || r < 1.0 {
            return Err(Error::Config(format!("binary knapsack needs positive integer prices, got {p}")));
        }
        weights.push(r as usize);
    }
    let cap = budget.floor() as usize;
    if n.saturating_mul(cap + 1) > MAX_TABLE {
        return Err(Error::TooLarge(format!("knapsack table {n} x {}", cap + 1)));
    }
    let value: Vec<f64> = theta.iter().zip(p_diag).map(|(t, p)| t - 0.5 * p).collect();

    // best[c] = (value, item count) over items seen so far within capacity c.
    let mut best = vec![(0.0_f64, 0_usize); cap + 1];
    let mut take = vec![false; n * (cap + 1)];
    for i in 0..n {
        if value[i] <= 0.0 || weights[i] > cap {
            continue;
        }
        for c in (weights[i]..=cap).rev() {
            let (pv, pc) = best[c - weights[i]];
            let cand = (pv + value[i], pc + 1);
            let cur = best[c];
            if cand.0 > cur.0 || (cand.0 == cur.0 && cand.1 < cur.1) {
                best[c] = cand;
                take[i * (cap + 1) + c] = true;
            }
        }
    }

    let mut x = vec![0.0; n];
    let mut c = cap;
    for i in (0..n).rev() {
        if take[i * (cap + 1) + c] {
            x[i] = 1.0;
            c -= weights[i];
        }
    }
    let utility = UtilityForm::QuadDiag { p: p_diag.to_vec() };
    ForwardSolution::finish(x, theta, &utility, SolveStatus::Optimal, n)
}
