//! Primal active-set method for
//!
//! ```text
//! min ½ xᵀ diag(P) x − ⟨θ, x⟩   s.t.  x ≥ 0,  A x ≤ c
//! ```
//!
//! with `A ≥ 0, c > 0`, so `x = 0` is a feasible vertex to start from. The
//! final working set doubles as the complementarity pattern used by the
//! bilevel oracle.

use nalgebra::{DMatrix, DVector};

use super::{ForwardSolution, SolveStatus};
use crate::domain::UtilityForm;
use crate::error::Result;
use crate::vecops::dot;

pub const MAX_ITER: usize = 50_000;
const TOL: f64 = 1e-12;

/// Solution of the diagonal QP with its multipliers and working set.
#[derive(Debug, Clone)]
pub struct ActiveSetQp {
    pub x: Vec<f64>,
    /// Multipliers of `x ≥ 0`.
    pub w: Vec<f64>,
    /// Multipliers of `A x ≤ c`.
    pub v: Vec<f64>,
    pub at_zero: Vec<bool>,
    pub binding: Vec<bool>,
    pub iterations: usize,
    pub converged: bool,
}

/// Solves the equality-constrained subproblem on the current working set.
///
/// Returns the Newton step on free coordinates and the row multipliers.
fn eqp(g: &[f64], p_diag: &[f64], rows: &[Vec<f64>], at_zero: &[bool], binding: &[bool]) -> (Vec<f64>, Vec<f64>) {
    let n = g.len();
    let free: Vec<usize> = (0..n).filter(|&i| !at_zero[i]).collect();
    let jrows: Vec<usize> = (0..rows.len()).filter(|&j| binding[j]).collect();
    let mut v = vec![0.0; rows.len()];
    if !jrows.is_empty() && !free.is_empty() {
        let k = jrows.len();
        let s = DMatrix::from_fn(k, k, |a, b| {
            free.iter().map(|&i| rows[jrows[a]][i] * rows[jrows[b]][i] / p_diag[i]).sum::<f64>()
        });
        let rhs = DVector::from_fn(k, |a, _| -free.iter().map(|&i| rows[jrows[a]][i] * g[i] / p_diag[i]).sum::<f64>());
        let sol = s.clone().cholesky().map(|c| c.solve(&rhs)).or_else(|| s.lu().solve(&rhs));
        if let Some(sol) = sol {
            for (a, &j) in jrows.iter().enumerate() {
                v[j] = sol[a];
            }
        }
    }
    let mut step = vec![0.0; n];
    for &i in &free {
        let atv: f64 = jrows.iter().map(|&j| rows[j][i] * v[j]).sum();
        step[i] = -(g[i] + atv) / p_diag[i];
    }
    (step, v)
}

pub fn active_set_qp(theta: &[f64], p_diag: &[f64], rows: &[Vec<f64>], rhs: &[f64]) -> ActiveSetQp {
    let n = theta.len();
    let m = rows.len();
    let mut x = vec![0.0; n];
    let mut at_zero = vec![true; n];
    let mut binding = vec![false; m];
    let mut iterations = 0;
    let scale = 1.0 + theta.iter().fold(0.0_f64, |a, t| a.max(t.abs()));

    loop {
        if iterations >= MAX_ITER {
            let (w, v) = multipliers(&x, theta, p_diag, rows, &at_zero, &binding);
            return ActiveSetQp { x, w, v, at_zero, binding, iterations, converged: false };
        }
        iterations += 1;
        let g: Vec<f64> = (0..n).map(|i| p_diag[i] * x[i] - theta[i]).collect();
        let (step, v) = eqp(&g, p_diag, rows, &at_zero, &binding);
        let step_norm = step.iter().fold(0.0_f64, |a, s| a.max(s.abs()));

        if step_norm <= TOL * scale {
            // Stationary on the working set: check multiplier signs.
            let w: Vec<f64> = (0..n)
                .map(|i| {
                    if at_zero[i] {
                        g[i] + (0..m).filter(|&j| binding[j]).map(|j| rows[j][i] * v[j]).sum::<f64>()
                    } else {
                        0.0
                    }
                })
                .collect();
            let mut worst: Option<(bool, usize, f64)> = None;
            for i in (0..n).filter(|&i| at_zero[i]) {
                if w[i] < worst.map_or(-TOL * scale, |(_, _, val)| val) {
                    worst = Some((true, i, w[i]));
                }
            }
            for j in (0..m).filter(|&j| binding[j]) {
                if v[j] < worst.map_or(-TOL * scale, |(_, _, val)| val) {
                    worst = Some((false, j, v[j]));
                }
            }
            match worst {
                None => {
                    for xi in x.iter_mut() {
                        if *xi < 0.0 {
                            *xi = 0.0;
                        }
                    }
                    let w = w.into_iter().map(|wi| wi.max(0.0)).collect();
                    let v = v.into_iter().map(|vj| vj.max(0.0)).collect();
                    return ActiveSetQp { x, w, v, at_zero, binding, iterations, converged: true };
                }
                Some((true, i, _)) => at_zero[i] = false,
                Some((false, j, _)) => binding[j] = false,
            }
            continue;
        }

        // Ratio test against constraints outside the working set.
        let mut alpha = 1.0;
        let mut blocker: Option<(bool, usize)> = None;
        for i in 0..n {
            if !at_zero[i] && step[i] < 0.0 {
                let a = x[i] / -step[i];
                if a < alpha {
                    alpha = a;
                    blocker = Some((true, i));
                }
            }
        }
        for j in 0..m {
            if binding[j] {
                continue;
            }
            let rate = dot(&rows[j], &step);
            if rate > TOL {
                let slack = (rhs[j] - dot(&rows[j], &x)).max(0.0);
                let a = slack / rate;
                if a < alpha {
                    alpha = a;
                    blocker = Some((false, j));
                }
            }
        }
        for i in 0..n {
            x[i] += alpha * step[i];
        }
        match blocker {
            Some((true, i)) => {
                x[i] = 0.0;
                at_zero[i] = true;
            }
            Some((false, j)) => binding[j] = true,
            None => {}
        }
    }
}

fn multipliers(
    x: &[f64],
    theta: &[f64],
    p_diag: &[f64],
    rows: &[Vec<f64>],
    at_zero: &[bool],
    binding: &[bool],
) -> (Vec<f64>, Vec<f64>) {
    let g: Vec<f64> = (0..x.len()).map(|i| p_diag[i] * x[i] - theta[i]).collect();
    let (_, v) = eqp(&g, p_diag, rows, at_zero, binding);
    let w = (0..x.len())
        .map(|i| {
            if at_zero[i] {
                g[i] + (0..rows.len()).filter(|&j| binding[j]).map(|j| rows[j][i] * v[j]).sum::<f64>()
            } else {
                0.0
            }
        })
        .collect();
    (w, v)
}

pub fn solve_quad_polytope(theta: &[f64], p_diag: &[f64], rows: &[Vec<f64>], rhs: &[f64]) -> Result<ForwardSolution> {
    let qp = active_set_qp(theta, p_diag, rows, rhs);
    let status = if qp.converged { SolveStatus::Optimal } else { SolveStatus::MaxIter };
    if !qp.converged {
        log::warn!("polytope QP hit the iteration cap after {} iterations", qp.iterations);
    }
    let utility = UtilityForm::QuadDiag { p: p_diag.to_vec() };
    ForwardSolution::finish(qp.x, theta, &utility, status, qp.iterations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn unconstrained_interior() {
        let qp = active_set_qp(&[0.2, 0.3], &[1.0, 1.0], &[vec![1.0, 1.0]], &[10.0]);
        assert!(qp.converged);
        assert_abs_diff_eq!(qp.x[0], 0.2, epsilon = 1e-14);
        assert_abs_diff_eq!(qp.x[1], 0.3, epsilon = 1e-14);
        assert_eq!(qp.binding, vec![false]);
        assert_eq!(qp.at_zero, vec![false, false]);
    }

    #[test]
    fn two_binding_rows_meet_at_a_vertex() {
        // x1 + 2 x2 ≤ 1, 2 x1 + x2 ≤ 1; the target (5, 5) is far outside.
        let rows = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
        let qp = active_set_qp(&[5.0, 5.0], &[1.0, 1.0], &rows, &[1.0, 1.0]);
        assert!(qp.converged);
        assert_abs_diff_eq!(qp.x[0], 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(qp.x[1], 1.0 / 3.0, epsilon = 1e-12);
        assert!(qp.v.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn negative_target_stays_at_zero() {
        let qp = active_set_qp(&[-1.0, 0.5], &[2.0, 1.0], &[vec![1.0, 1.0]], &[1.0]);
        assert_eq!(qp.x[0], 0.0);
        assert_abs_diff_eq!(qp.x[1], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(qp.w[0], 1.0, epsilon = 1e-14);
    }
}
