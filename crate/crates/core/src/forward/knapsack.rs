use super::{floored_theta, ForwardSolution, SolveStatus};
use crate::domain::UtilityForm;
use crate::error::{Error, Result};
use crate::vecops::dot;

const BISECTION_MAX_ITER: usize = 200;

fn water_level(theta: &[f64], p_diag: &[f64], prices: &[f64], lambda: f64) -> Vec<f64> {
    theta.iter().zip(p_diag).zip(prices).map(|((t, pd), pr)| ((t - lambda * pr) / pd).max(0.0)).collect()
}

/// `min ½xᵀdiag(P)x − ⟨θ,x⟩` over `{x ≥ 0 : ⟨p,x⟩ ≤ b}` by bisection on the
/// budget multiplier, followed by an exact solve on the detected support.
pub fn solve_quad_knapsack(theta: &[f64], p_diag: &[f64], prices: &[f64], budget: f64) -> Result<ForwardSolution> {
    let utility = UtilityForm::QuadDiag { p: p_diag.to_vec() };
    let x0 = water_level(theta, p_diag, prices, 0.0);
    if dot(prices, &x0) <= budget {
        return ForwardSolution::finish(x0, theta, &utility, SolveStatus::Optimal, 0);
    }

    // At λ_hi every coordinate is clipped to zero.
    let mut lo = 0.0;
    let mut hi = theta.iter().zip(prices).map(|(t, p)| t / p).fold(0.0_f64, f64::max);
    let tol = 1e-10 * budget;
    let mut iterations = 0;
    let mut lambda = 0.5 * (lo + hi);
    while iterations < BISECTION_MAX_ITER {
        iterations += 1;
        lambda = 0.5 * (lo + hi);
        let spend = dot(prices, &water_level(theta, p_diag, prices, lambda));
        if (spend - budget).abs() <= tol {
            break;
        }
        if spend > budget {
            lo = lambda;
        } else {
            hi = lambda;
        }
    }

    // Recompute λ exactly on the support found by bisection.
    let support: Vec<usize> = (0..theta.len()).filter(|&i| theta[i] - lambda * prices[i] > 0.0).collect();
    let num: f64 = support.iter().map(|&i| prices[i] * theta[i] / p_diag[i]).sum::<f64>() - budget;
    let den: f64 = support.iter().map(|&i| prices[i] * prices[i] / p_diag[i]).sum();
    if den > 0.0 {
        let exact = num / den;
        let consistent = exact >= 0.0
            && (0..theta.len()).all(|i| {
                let active = theta[i] - exact * prices[i] > 0.0;
                active == support.contains(&i) || (theta[i] - exact * prices[i]).abs() <= 1e-14
            });
        if consistent {
            lambda = exact;
        }
    }
    let x = water_level(theta, p_diag, prices, lambda);
    ForwardSolution::finish(x, theta, &utility, SolveStatus::Optimal, iterations)
}

/// `min Σ θ_i x_i²` over `{x ≥ 0 : ⟨p,x⟩ = b}` in closed form.
pub fn solve_ces_eq_knapsack(theta: &[f64], prices: &[f64], budget: f64) -> Result<ForwardSolution> {
    let th = floored_theta(theta)?;
    let denom: f64 = prices.iter().zip(&th).map(|(p, t)| p * p / t).sum();
    if !(denom.is_finite() && denom > 0.0) {
        return Err(Error::NumericalGuard(format!("CES normalizer {denom}")));
    }
    let lambda = 2.0 * budget / denom;
    let x: Vec<f64> = prices.iter().zip(&th).map(|(p, t)| lambda * p / (2.0 * t)).collect();
    ForwardSolution::finish(x, theta, &UtilityForm::Ces, SolveStatus::Optimal, 0)
}

/// `max ⟨θ,x⟩` over the knapsack: the whole budget goes to the best
/// value-per-price index (smallest index on ties), or nothing is bought.
pub fn solve_bilinear_knapsack(theta: &[f64], prices: &[f64], budget: f64) -> Result<ForwardSolution> {
    let mut best: Option<(usize, f64)> = None;
    for (i, (t, p)) in theta.iter().zip(prices).enumerate() {
        let ratio = t / p;
        if ratio > 0.0 && best.is_none_or(|(_, r)| ratio > r) {
            best = Some((i, ratio));
        }
    }
    let mut x = vec![0.0; theta.len()];
    if let Some((i, _)) = best {
        x[i] = budget / prices[i];
    }
    ForwardSolution::finish(x, theta, &UtilityForm::Bilinear, SolveStatus::Optimal, 0)
}

/// `max Σ θ_i log x_i` over the knapsack: spend the θ-share of the budget
/// on each good.
pub fn solve_cobb_douglas_knapsack(
    theta: &[f64],
    prices: &[f64],
    budget: f64,
    utility: &UtilityForm,
) -> Result<ForwardSolution> {
    let th = floored_theta(theta)?;
    let total: f64 = th.iter().sum();
    let x: Vec<f64> = th.iter().zip(prices).map(|(t, p)| t * budget / (p * total)).collect();
    ForwardSolution::finish(x, theta, utility, SolveStatus::Optimal, 0)
}
