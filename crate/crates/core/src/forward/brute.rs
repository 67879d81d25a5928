//! Exhaustive reference solver used as a test oracle.
//!
//! Continuous domains are searched on a grid of budget fractions followed
//! by a shrinking pattern search around the best grid point. Quadratic
//! problems over inequality domains enumerate faces, binary domains
//! enumerate subsets and bilinear problems enumerate vertices.

use super::{ForwardSolution, SolveStatus};
use crate::domain::{objective, Domain, Instance, UtilityForm};
use crate::error::{Error, Result};
use crate::vecops::norm2;
use nalgebra::{DMatrix, DVector};

const MAX_GRID_DIM: usize = 3;
const MAX_ENUM_DIM: usize = 15;
const MAX_FACE_BITS: usize = 20;

/// Maps fraction coordinates in `[0,1]^k` to an action, or `None` when the
/// point falls outside the domain.
struct Chart<'a> {
    domain: &'a Domain,
    bounds: Vec<f64>,
}

impl Chart<'_> {
    fn action(&self, f: &[f64]) -> Option<Vec<f64>> {
        if f.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return None;
        }
        match self.domain {
            Domain::ContKnapsack { .. } => {
                if f.iter().sum::<f64>() > 1.0 + 1e-15 {
                    return None;
                }
                Some(f.iter().zip(&self.bounds).map(|(a, b)| a * b).collect())
            }
            Domain::EqKnapsack { .. } => {
                let last = 1.0 - f.iter().sum::<f64>();
                if last < -1e-15 {
                    return None;
                }
                let mut frac = f.to_vec();
                frac.push(last.max(0.0));
                Some(frac.iter().zip(&self.bounds).map(|(a, b)| a * b).collect())
            }
            Domain::Polytope { .. } => {
                let x: Vec<f64> = f.iter().zip(&self.bounds).map(|(a, b)| a * b).collect();
                self.domain.contains(&x, 1e-12).then_some(x)
            }
            Domain::Interval { lo, hi } => Some(vec![lo + f[0] * (hi - lo)]),
            Domain::BinKnapsack { .. } => None,
        }
    }
}

fn better(obj: f64, x: &[f64], best: &Option<(f64, Vec<f64>)>) -> bool {
    match best {
        None => true,
        Some((b, bx)) => obj < *b || (obj == *b && norm2(x) < norm2(bx)),
    }
}

fn score(x: &[f64], theta: &[f64], utility: &UtilityForm) -> Option<f64> {
    objective(x, theta, utility).ok().filter(|v| v.is_finite())
}

/// `resolution` is the number of grid divisions per fraction axis.
pub fn brute_force_forward(theta: &[f64], inst: &Instance, resolution: usize) -> Result<ForwardSolution> {
    let n = inst.n;
    let utility = &inst.utility;
    if let Domain::BinKnapsack { prices, budget } = &inst.domain {
        if n > MAX_ENUM_DIM {
            return Err(Error::TooLarge(format!("binary enumeration refused for n = {n} > {MAX_ENUM_DIM}")));
        }
        let mut best: Option<(f64, Vec<f64>)> = None;
        for mask in 0u32..(1 << n) {
            let x: Vec<f64> = (0..n).map(|i| ((mask >> i) & 1) as f64).collect();
            let spend: f64 = x.iter().zip(prices).map(|(a, p)| a * p).sum();
            if spend > *budget {
                continue;
            }
            if let Some(obj) = score(&x, theta, utility) {
                if better(obj, &x, &best) {
                    best = Some((obj, x));
                }
            }
        }
        let (_, x) = best.expect("the empty set is always feasible");
        return ForwardSolution::finish(x, theta, utility, SolveStatus::Optimal, 1 << n);
    }

    if let (UtilityForm::Bilinear, Domain::ContKnapsack { prices, budget }) = (utility, &inst.domain) {
        let mut best: Option<(f64, Vec<f64>)> = None;
        let mut vertices = vec![vec![0.0; n]];
        for i in 0..n {
            let mut v = vec![0.0; n];
            v[i] = budget / prices[i];
            vertices.push(v);
        }
        for x in vertices {
            let obj = score(&x, theta, utility).expect("finite vertex");
            if best.as_ref().is_none_or(|(b, _)| obj < *b) {
                best = Some((obj, x));
            }
        }
        let (_, x) = best.expect("vertices are nonempty");
        return ForwardSolution::finish(x, theta, utility, SolveStatus::Optimal, n + 1);
    }

    if let UtilityForm::QuadDiag { p } = utility {
        if let Some((rows, rhs)) = inst.domain.inequality_rows() {
            return active_set_enumeration(theta, p, &rows, &rhs, utility);
        }
    }

    if n > MAX_GRID_DIM {
        return Err(Error::TooLarge(format!("grid search refused for n = {n} > {MAX_GRID_DIM}")));
    }
    let resolution = resolution.max(1);
    let k = if matches!(inst.domain, Domain::EqKnapsack { .. }) { n - 1 } else { n };
    let bounds = match &inst.domain {
        Domain::Interval { .. } => vec![1.0],
        d => d.coordinate_bounds(),
    };
    let chart = Chart { domain: &inst.domain, bounds };

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut best_frac = vec![0.0; k];
    let mut evaluations = 0;
    let mut idx = vec![0usize; k];
    loop {
        let f: Vec<f64> = idx.iter().map(|&i| i as f64 / resolution as f64).collect();
        if let Some(x) = chart.action(&f) {
            evaluations += 1;
            if let Some(obj) = score(&x, theta, utility) {
                if better(obj, &x, &best) {
                    best = Some((obj, x));
                    best_frac = f;
                }
            }
        }
        // Odometer increment over {0..=resolution}^k.
        let mut d = 0;
        while d < k {
            idx[d] += 1;
            if idx[d] <= resolution {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
        if d == k {
            break;
        }
    }
    if let Domain::Interval { lo, hi } = inst.domain {
        if lo <= 0.0 && 0.0 <= hi {
            let x = vec![0.0];
            if let Some(obj) = score(&x, theta, utility) {
                if better(obj, &x, &best) {
                    best = Some((obj, x));
                    best_frac = vec![-lo / (hi - lo)];
                }
            }
        }
    }
    let Some((mut best_obj, mut best_x)) = best else {
        return Ok(ForwardSolution {
            x: vec![0.0; n],
            objective: f64::INFINITY,
            status: SolveStatus::Infeasible,
            iterations: evaluations,
            tie_break_norm: 0.0,
        });
    };

    // Pattern search over all sign combinations, halving the stride.
    let dirs: Vec<Vec<f64>> = (0..3usize.pow(k as u32))
        .map(|mut code| {
            (0..k)
                .map(|_| {
                    let v = (code % 3) as f64 - 1.0;
                    code /= 3;
                    v
                })
                .collect()
        })
        .filter(|d: &Vec<f64>| d.iter().any(|&v| v != 0.0))
        .collect();
    let mut stride = 1.0 / resolution as f64;
    while stride > 1e-13 {
        let mut moved = false;
        for d in &dirs {
            let f: Vec<f64> = best_frac.iter().zip(d).map(|(a, b)| a + stride * b).collect();
            if let Some(x) = chart.action(&f) {
                evaluations += 1;
                if let Some(obj) = score(&x, theta, utility) {
                    if obj < best_obj {
                        best_obj = obj;
                        best_x = x;
                        best_frac = f;
                        moved = true;
                    }
                }
            }
        }
        if !moved {
            stride *= 0.5;
        }
    }
    ForwardSolution::finish(best_x, theta, utility, SolveStatus::Optimal, evaluations)
}

/// Every face of `{x ≥ 0, Ax ≤ c}` is tried: fix its constraints as
/// equalities, solve the reduced stationarity system and keep the best
/// feasible point. The convex optimum lies in the relative interior of
/// one face, so this is exact.
fn active_set_enumeration(
    theta: &[f64],
    p_diag: &[f64],
    rows: &[Vec<f64>],
    rhs: &[f64],
    utility: &UtilityForm,
) -> Result<ForwardSolution> {
    let (n, m) = (theta.len(), rows.len());
    if n + m > MAX_FACE_BITS {
        return Err(Error::TooLarge(format!("face enumeration refused for n + m = {} > {MAX_FACE_BITS}", n + m)));
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << (n + m)) {
        let free: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 0).collect();
        let tight: Vec<usize> = (0..m).filter(|j| mask >> (n + j) & 1 == 1).collect();
        // x_F = P_F⁻¹(θ_F − A_Fᵀ v) with (A_F P_F⁻¹ A_Fᵀ) v = A_F P_F⁻¹ θ_F − c.
        let k = tight.len();
        let mut v = DVector::zeros(k);
        if k > 0 {
            let gram = DMatrix::from_fn(k, k, |a, b| {
                free.iter().map(|&i| rows[tight[a]][i] * rows[tight[b]][i] / p_diag[i]).sum::<f64>()
            });
            let r = DVector::from_fn(k, |a, _| {
                free.iter().map(|&i| rows[tight[a]][i] * theta[i] / p_diag[i]).sum::<f64>() - rhs[tight[a]]
            });
            match gram.lu().solve(&r) {
                Some(sol) if sol.iter().all(|x| x.is_finite()) => v = sol,
                _ => continue,
            }
        }
        let mut x = vec![0.0; n];
        for &i in &free {
            let atv: f64 = tight.iter().enumerate().map(|(a, &j)| rows[j][i] * v[a]).sum();
            x[i] = (theta[i] - atv) / p_diag[i];
        }
        let scale = 1.0 + x.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
        let feasible = x.iter().all(|&xi| xi >= -1e-12 * scale)
            && rows
                .iter()
                .zip(rhs)
                .all(|(a, c)| a.iter().zip(&x).map(|(ai, xi)| ai * xi).sum::<f64>() <= c + 1e-9 * (1.0 + c.abs()));
        if !feasible {
            continue;
        }
        x.iter_mut().for_each(|xi| *xi = xi.max(0.0));
        if let Some(obj) = score(&x, theta, utility) {
            if better(obj, &x, &best) {
                best = Some((obj, x));
            }
        }
    }
    let (_, x) = best.expect("the origin is a feasible face");
    ForwardSolution::finish(x, theta, utility, SolveStatus::Optimal, 1 << (n + m))
}
