//! Forward solvers: the agent's action `x(θ; u) = argmin_x f(x; θ, u)`.
//!
//! Alternate optima are resolved toward the smaller Euclidean norm, then
//! lexicographically.

mod binary;
mod brute;
mod custom;
mod knapsack;
pub mod polytope;

pub use binary::solve_binary_knapsack;
pub use brute::brute_force_forward;
pub use custom::solve_custom_1d;
pub use knapsack::{solve_bilinear_knapsack, solve_ces_eq_knapsack, solve_cobb_douglas_knapsack, solve_quad_knapsack};
pub use polytope::{solve_quad_polytope, ActiveSetQp};

use crate::domain::{objective, Domain, Instance, ParameterPoint, UtilityForm};
use crate::error::{Error, Result};
use crate::vecops::norm2;

/// Closed forms divide by θ_i; coordinates below this are raised to it.
pub const THETA_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    MaxIter,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub status: SolveStatus,
    pub iterations: usize,
    /// Norm used to pick among alternate optima.
    pub tie_break_norm: f64,
}

impl ForwardSolution {
    pub(crate) fn finish(
        x: Vec<f64>,
        theta: &[f64],
        utility: &UtilityForm,
        status: SolveStatus,
        iterations: usize,
    ) -> Result<Self> {
        let objective = objective(&x, theta, utility)?;
        let tie_break_norm = norm2(&x);
        Ok(ForwardSolution { x, objective, status, iterations, tie_break_norm })
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// Dispatches on the (utility, domain) pair of `inst`.
pub fn solve(theta: &[f64], inst: &Instance) -> Result<ForwardSolution> {
    if theta.len() != inst.n {
        return Err(Error::Dimension(format!("θ has {} coordinates, instance {}", theta.len(), inst.n)));
    }
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidPoint("non-finite θ".into()));
    }
    match (&inst.utility, &inst.domain) {
        (UtilityForm::QuadDiag { p }, Domain::ContKnapsack { prices, budget }) => {
            solve_quad_knapsack(theta, p, prices, *budget)
        }
        (UtilityForm::QuadDiag { p }, Domain::Polytope { rows, rhs }) => solve_quad_polytope(theta, p, rows, rhs),
        (UtilityForm::QuadDiag { p }, Domain::BinKnapsack { prices, budget }) => {
            solve_binary_knapsack(theta, p, prices, *budget)
        }
        (UtilityForm::Ces, Domain::EqKnapsack { prices, budget }) => solve_ces_eq_knapsack(theta, prices, *budget),
        (UtilityForm::Bilinear, Domain::ContKnapsack { prices, budget }) => {
            solve_bilinear_knapsack(theta, prices, *budget)
        }
        (UtilityForm::CobbDouglas { .. }, Domain::ContKnapsack { prices, budget }) => {
            solve_cobb_douglas_knapsack(theta, prices, *budget, &inst.utility)
        }
        (UtilityForm::Custom1d(kind), Domain::Interval { lo, hi }) => solve_custom_1d(theta[0], *kind, *lo, *hi),
        (u, d) => Err(Error::Config(format!("no forward solver for {} utility over {} domain", u.tag(), d.tag()))),
    }
}

/// `solve` for a validated parameter point.
pub fn solve_forward(theta: &ParameterPoint, inst: &Instance) -> Result<ForwardSolution> {
    solve(theta.values(), inst)
}

/// Raises every coordinate to at least [`THETA_FLOOR`]; negative inputs are
/// rejected rather than silently repaired.
pub(crate) fn floored_theta(theta: &[f64]) -> Result<Vec<f64>> {
    if let Some(v) = theta.iter().find(|&&v| v < 0.0) {
        return Err(Error::NumericalGuard(format!("closed form needs θ ≥ 0, got {v}")));
    }
    Ok(theta.iter().map(|&v| v.max(THETA_FLOOR)).collect())
}
