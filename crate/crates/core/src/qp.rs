//! Dense strictly convex QP by the Goldfarb–Idnani dual active-set method:
//!
//! ```text
//! min ½ xᵀ G x + ⟨a, x⟩   s.t.  ⟨n_e, x⟩ = b_e,  ⟨n_i, x⟩ ≥ b_i
//! ```
//!
//! Each iteration re-solves the KKT system of the current active set, which
//! is cheap at the sizes used here (tens of variables) and avoids the
//! bookkeeping of factor updates.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Constraint {
    pub normal: Vec<f64>,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(normal: Vec<f64>, rhs: f64) -> Self {
        Constraint { normal, rhs }
    }
}

#[derive(Debug, Clone, Default)]
pub struct QpProblem {
    pub g: Vec<Vec<f64>>,
    pub a: Vec<f64>,
    pub eq: Vec<Constraint>,
    /// `⟨normal, x⟩ ≥ rhs`.
    pub ineq: Vec<Constraint>,
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Indices into `ineq` active at the solution.
    pub active_ineq: Vec<usize>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Eq(usize, f64),
    Ineq(usize),
}

struct Active {
    kind: Kind,
    u: f64,
}

fn dotv(a: &[f64], b: &DVector<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Solves `[G N; Nᵀ 0] [z; r] = [n_p; 0]`. `None` if singular.
fn directions(g: &DMatrix<f64>, cols: &[Vec<f64>], np: &[f64]) -> Option<(DVector<f64>, DVector<f64>)> {
    let n = g.nrows();
    let k = cols.len();
    let mut kkt = DMatrix::zeros(n + k, n + k);
    kkt.view_mut((0, 0), (n, n)).copy_from(g);
    for (j, c) in cols.iter().enumerate() {
        for i in 0..n {
            kkt[(i, n + j)] = c[i];
            kkt[(n + j, i)] = c[i];
        }
    }
    let mut rhs = DVector::zeros(n + k);
    for i in 0..n {
        rhs[i] = np[i];
    }
    let sol = kkt.lu().solve(&rhs)?;
    if sol.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some((sol.rows(0, n).into_owned(), sol.rows(n, k).into_owned()))
}

pub fn solve_qp(prob: &QpProblem) -> Result<QpSolution> {
    let n = prob.a.len();
    if prob.g.len() != n || prob.g.iter().any(|r| r.len() != n) {
        return Err(Error::Dimension("QP Hessian does not match linear term".into()));
    }
    if prob.eq.iter().chain(&prob.ineq).any(|c| c.normal.len() != n) {
        return Err(Error::Dimension("QP constraint normal has wrong length".into()));
    }
    let g = DMatrix::from_fn(n, n, |i, j| prob.g[i][j]);
    let a = DVector::from_column_slice(&prob.a);
    let chol = g.clone().cholesky().ok_or_else(|| Error::Solver("QP Hessian is not positive definite".into()))?;
    let mut x = chol.solve(&(-&a));

    let scale = 1.0
        + prob.a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
        + prob.eq.iter().chain(&prob.ineq).fold(0.0_f64, |m, c| m.max(c.rhs.abs()));
    let tol = 1e-12 * scale;
    let gmax = g.amax().max(f64::MIN_POSITIVE);
    let mut active: Vec<Active> = Vec::new();
    let max_iter = 50 * (n + prob.eq.len() + prob.ineq.len()) + 1000;
    let mut iterations = 0;

    let normal = |kind: Kind| -> (Vec<f64>, f64) {
        match kind {
            Kind::Eq(e, sign) => (prob.eq[e].normal.iter().map(|v| sign * v).collect(), sign * prob.eq[e].rhs),
            Kind::Ineq(i) => (prob.ineq[i].normal.clone(), prob.ineq[i].rhs),
        }
    };

    loop {
        // Equalities go in first, then the most violated inequality.
        let mut pick: Option<(Kind, f64)> = None;
        for (e, c) in prob.eq.iter().enumerate() {
            if active.iter().any(|a| matches!(a.kind, Kind::Eq(j, _) if j == e)) {
                continue;
            }
            let s = dotv(&c.normal, &x) - c.rhs;
            let sign = if s > 0.0 { -1.0 } else { 1.0 };
            pick = Some((Kind::Eq(e, sign), -(s.abs())));
            break;
        }
        if pick.is_none() {
            for (i, c) in prob.ineq.iter().enumerate() {
                if active.iter().any(|a| a.kind == Kind::Ineq(i)) {
                    continue;
                }
                let s = dotv(&c.normal, &x) - c.rhs;
                if s < -tol && pick.is_none_or(|(_, v)| s < v) {
                    pick = Some((Kind::Ineq(i), s));
                }
            }
        }
        let Some((pk, _)) = pick else {
            let worst = prob
                .eq
                .iter()
                .map(|c| (dotv(&c.normal, &x) - c.rhs).abs())
                .chain(prob.ineq.iter().map(|c| c.rhs - dotv(&c.normal, &x)))
                .fold(0.0_f64, f64::max);
            if !(worst <= 1e-9 * scale) {
                return Err(Error::Solver(format!("QP ended {worst:e} outside its constraints")));
            }
            let objective = 0.5 * x.dot(&(&g * &x)) + a.dot(&x);
            let mut active_ineq: Vec<usize> = active
                .iter()
                .filter_map(|a| match a.kind {
                    Kind::Ineq(i) => Some(i),
                    _ => None,
                })
                .collect();
            active_ineq.sort_unstable();
            return Ok(QpSolution { x: x.iter().cloned().collect(), objective, active_ineq, iterations });
        };
        let (np, bp) = normal(pk);
        let mut up = 0.0;

        // Step until constraint p is satisfied with equality.
        loop {
            iterations += 1;
            if iterations > max_iter {
                return Err(Error::Solver(format!("QP exceeded {max_iter} iterations")));
            }
            let cols: Vec<Vec<f64>> = active.iter().map(|a| normal(a.kind).0).collect();
            let (z, r) = directions(&g, &cols, &np).ok_or_else(|| Error::Solver("singular KKT system in QP".into()))?;
            let znorm = z.amax();
            let s = dotv(&np, &x) - bp;

            // Largest dual step keeping inequality multipliers nonnegative.
            let mut t1: Option<(f64, usize)> = None;
            for (j, act) in active.iter().enumerate() {
                if matches!(act.kind, Kind::Ineq(_)) && r[j] > 0.0 {
                    let t = act.u / r[j];
                    if t1.is_none_or(|(b, _)| t < b) {
                        t1 = Some((t, j));
                    }
                }
            }
            let zn = dotv(&np, &z);
            // z vanishes when n_p lies in the span of the active normals;
            // judge that relative to the data, not absolutely.
            let np_sq: f64 = np.iter().map(|v| v * v).sum();
            let full = if znorm > 1e-14 && zn > 1e-12 * np_sq / gmax { Some(-s / zn) } else { None };

            match (full, t1) {
                (None, None) => {
                    return Err(Error::Solver("QP is infeasible".into()));
                }
                (None, Some((t, j))) => {
                    for (k, act) in active.iter_mut().enumerate() {
                        act.u -= t * r[k];
                    }
                    up += t;
                    active.remove(j);
                }
                (Some(t2), t1v) => {
                    let (t, drop) = match t1v {
                        Some((t1, j)) if t1 < t2 => (t1, Some(j)),
                        _ => (t2, None),
                    };
                    x += &z * t;
                    for (k, act) in active.iter_mut().enumerate() {
                        act.u -= t * r[k];
                    }
                    up += t;
                    match drop {
                        Some(j) => {
                            active.remove(j);
                        }
                        None => {
                            active.push(Active { kind: pk, u: up });
                            break;
                        }
                    }
                }
            }
        }
    }
}
