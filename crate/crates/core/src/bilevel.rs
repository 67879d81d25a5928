//! Implicit online update for the prediction loss,
//!
//! ```text
//! θ_{t+1} = argmin_{θ∈Θ} ½‖θ − θ_t‖² + η_t ‖y_t − x(θ; u_t)‖²
//! ```
//!
//! where `x(θ)` solves the agent's diagonal QP over `{x ≥ 0, Ax ≤ c}`.
//!
//! Fixing which complementarity pair is tight in each coordinate and row
//! (a *pattern*) makes the KKT system linear, so `x`, its multipliers and
//! the outer objective are affine/quadratic in θ on the pattern's critical
//! region. The global optimum is the best region optimum. Regions are
//! explored best-first from the one containing θ_t, moving to neighbours
//! across region facets and pruning any region whose distance to θ_t alone
//! already exceeds the incumbent.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use nalgebra::{DMatrix, DVector};

use crate::domain::{Custom1d, Domain, Instance, ParamSpace, ParameterPoint, UtilityForm};
use crate::error::{Error, Result};
use crate::forward::polytope::active_set_qp;
use crate::forward::solve;
use crate::qp::{solve_qp, Constraint, QpProblem};
use crate::vecops::{dist2_sq, dot};

/// Largest action dimension the oracle accepts.
pub const MAX_DIM: usize = 15;

/// Which side of each complementarity pair is tight.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Pattern {
    /// `x_i = 0` (otherwise its multiplier `w_i = 0`).
    pub at_zero: Vec<bool>,
    /// Row `j` holds with equality (otherwise `v_j = 0`).
    pub binding: Vec<bool>,
}

impl Pattern {
    fn flip(&self, f: Flip) -> Pattern {
        let mut p = self.clone();
        match f {
            Flip::Bound(i) => p.at_zero[i] = !p.at_zero[i],
            Flip::Row(j) => p.binding[j] = !p.binding[j],
        }
        p
    }

    fn from_bits(n: usize, m: usize, bits: u64) -> Pattern {
        Pattern {
            at_zero: (0..n).map(|i| bits >> i & 1 == 1).collect(),
            binding: (0..m).map(|j| bits >> (n + j) & 1 == 1).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Flip {
    Bound(usize),
    Row(usize),
}

/// Primal-dual point of the inner QP.
#[derive(Debug, Clone, PartialEq)]
pub struct KktPoint {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
    pub v: Vec<f64>,
    pub active_x: Vec<bool>,
    pub active_g: Vec<bool>,
}

impl KktPoint {
    /// Largest violation of stationarity and complementarity.
    pub fn residual(&self, theta: &[f64], p_diag: &[f64], rows: &[Vec<f64>], rhs: &[f64]) -> f64 {
        let n = self.x.len();
        let mut r = 0.0_f64;
        for i in 0..n {
            let atv: f64 = rows.iter().zip(&self.v).map(|(a, v)| a[i] * v).sum();
            r = r.max((p_diag[i] * self.x[i] - theta[i] + atv - self.w[i]).abs());
            r = r.max((self.w[i] * self.x[i]).abs());
        }
        for (j, a) in rows.iter().enumerate() {
            r = r.max((self.v[j] * (dot(a, &self.x) - rhs[j])).abs());
        }
        r
    }
}

/// Everything the update needs for one step.
#[derive(Debug, Clone)]
pub struct BilevelProblem {
    pub p_diag: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    pub y: Vec<f64>,
    pub theta_t: Vec<f64>,
    pub eta: f64,
    pub space: ParamSpace,
}

impl BilevelProblem {
    pub fn new(theta_t: &ParameterPoint, eta: f64, inst: &Instance, y: &[f64]) -> Result<Self> {
        let UtilityForm::QuadDiag { p } = &inst.utility else {
            return Err(Error::Config("the prediction-loss oracle needs the quadratic utility".into()));
        };
        let Some((rows, rhs)) = inst.domain.inequality_rows() else {
            return Err(Error::Config(format!(
                "the prediction-loss oracle needs a continuous knapsack or polytope, got {}",
                inst.domain.tag()
            )));
        };
        if inst.n > MAX_DIM {
            return Err(Error::TooLarge(format!(
                "prediction-loss oracle is limited to n ≤ {MAX_DIM} (got {}); lower --n",
                inst.n
            )));
        }
        if y.len() != inst.n || theta_t.dim() != inst.n {
            return Err(Error::Dimension("observation or θ_t does not match the instance".into()));
        }
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(Error::Config(format!("step size {eta} must be nonnegative")));
        }
        Ok(BilevelProblem {
            p_diag: p.clone(),
            rows,
            rhs,
            y: y.to_vec(),
            theta_t: theta_t.values().to_vec(),
            eta,
            space: theta_t.space(),
        })
    }

    fn n(&self) -> usize {
        self.p_diag.len()
    }

    fn m(&self) -> usize {
        self.rows.len()
    }

    /// Outer objective at θ using the exact inner solve.
    pub fn objective(&self, theta: &[f64]) -> f64 {
        let x = active_set_qp(theta, &self.p_diag, &self.rows, &self.rhs).x;
        0.5 * dist2_sq(theta, &self.theta_t) + self.eta * dist2_sq(&self.y, &x)
    }

    fn theta_constraints(&self) -> (Vec<Constraint>, Vec<Constraint>) {
        let n = self.n();
        let unit = |i: usize, s: f64| {
            let mut e = vec![0.0; n];
            e[i] = s;
            e
        };
        match self.space {
            ParamSpace::Simplex => {
                (vec![Constraint::new(vec![1.0; n], 1.0)], (0..n).map(|i| Constraint::new(unit(i, 1.0), 0.0)).collect())
            }
            ParamSpace::Box { lo, hi } => (
                vec![],
                (0..n).flat_map(|i| [Constraint::new(unit(i, 1.0), lo), Constraint::new(unit(i, -1.0), -hi)]).collect(),
            ),
        }
    }
}

/// `x`, `v`, `w` as affine functions of θ on one pattern.
struct AffineRegion {
    pattern: Pattern,
    mx: Vec<Vec<f64>>,
    x0: Vec<f64>,
    mv: Vec<Vec<f64>>,
    v0: Vec<f64>,
    mw: Vec<Vec<f64>>,
    w0: Vec<f64>,
    /// `⟨normal, θ⟩ ≥ rhs` for every pair not fixed by the pattern.
    cuts: Vec<(Constraint, Flip)>,
}

const DEGENERACY_TOL: f64 = 1e-9;

impl AffineRegion {
    fn build(pattern: &Pattern, prob: &BilevelProblem) -> Option<AffineRegion> {
        let (n, m) = (prob.n(), prob.m());
        let pd = &prob.p_diag;
        let free: Vec<usize> = (0..n).filter(|&i| !pattern.at_zero[i]).collect();
        let jrows: Vec<usize> = (0..m).filter(|&j| pattern.binding[j]).collect();
        let k = jrows.len();
        if k > free.len() {
            return None;
        }

        let mut mv = vec![vec![0.0; n]; m];
        let mut v0 = vec![0.0; m];
        if k > 0 {
            let s = DMatrix::from_fn(k, k, |a, b| {
                free.iter().map(|&i| prob.rows[jrows[a]][i] * prob.rows[jrows[b]][i] / pd[i]).sum::<f64>()
            });
            let chol = s.clone().cholesky()?;
            let l = chol.l();
            let diag_max = (0..k).map(|a| l[(a, a)]).fold(0.0_f64, f64::max);
            let diag_min = (0..k).map(|a| l[(a, a)]).fold(f64::INFINITY, f64::min);
            if !(diag_min > DEGENERACY_TOL * diag_max) {
                return None;
            }
            let b =
                DMatrix::from_fn(k, n, |a, i| if pattern.at_zero[i] { 0.0 } else { prob.rows[jrows[a]][i] / pd[i] });
            let c = DVector::from_fn(k, |a, _| prob.rhs[jrows[a]]);
            let sb = chol.solve(&b);
            let sc = chol.solve(&c);
            for (a, &j) in jrows.iter().enumerate() {
                mv[j] = (0..n).map(|i| sb[(a, i)]).collect();
                v0[j] = -sc[a];
            }
        }

        let mut mx = vec![vec![0.0; n]; n];
        let mut x0 = vec![0.0; n];
        let mut mw = vec![vec![0.0; n]; n];
        let mut w0 = vec![0.0; n];
        for i in 0..n {
            let mut row: Vec<f64> = vec![0.0; n];
            let mut c0 = 0.0;
            for &j in &jrows {
                let a = prob.rows[j][i];
                if a != 0.0 {
                    for (r, mvj) in row.iter_mut().zip(&mv[j]) {
                        *r += a * mvj;
                    }
                    c0 += a * v0[j];
                }
            }
            if pattern.at_zero[i] {
                row[i] -= 1.0;
                mw[i] = row;
                w0[i] = c0;
            } else {
                mx[i] = row.iter().enumerate().map(|(q, r)| ((q == i) as u8 as f64 - r) / pd[i]).collect();
                x0[i] = -c0 / pd[i];
            }
        }

        let mut region = AffineRegion { pattern: pattern.clone(), mx, x0, mv, v0, mw, w0, cuts: Vec::new() };
        for i in 0..n {
            let (normal, c) = if pattern.at_zero[i] {
                (region.mw[i].clone(), region.w0[i])
            } else {
                (region.mx[i].clone(), region.x0[i])
            };
            if !region.push_cut(normal, c, Flip::Bound(i)) {
                return None;
            }
        }
        for j in 0..m {
            let (normal, c) = if pattern.binding[j] {
                (region.mv[j].clone(), region.v0[j])
            } else {
                let a = &prob.rows[j];
                let normal = (0..n).map(|q| -(0..n).map(|i| a[i] * region.mx[i][q]).sum::<f64>()).collect();
                (normal, prob.rhs[j] - dot(a, &region.x0))
            };
            if !region.push_cut(normal, c, Flip::Row(j)) {
                return None;
            }
        }
        Some(region)
    }

    /// Adds `⟨normal, θ⟩ + c ≥ 0`; returns false if it is a constant
    /// violated inequality.
    fn push_cut(&mut self, normal: Vec<f64>, c: f64, flip: Flip) -> bool {
        let size = normal.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if size <= 1e-14 {
            return c >= -1e-12;
        }
        self.cuts.push((Constraint::new(normal, -c), flip));
        true
    }

    fn x_at(&self, theta: &[f64]) -> Vec<f64> {
        self.mx.iter().zip(&self.x0).map(|(r, c)| dot(r, theta) + c).collect()
    }

    fn kkt_at(&self, theta: &[f64]) -> KktPoint {
        let x = self.x_at(theta).into_iter().map(|v| v.max(0.0)).collect();
        let v = self
            .mv
            .iter()
            .zip(&self.v0)
            .enumerate()
            .map(|(j, (r, c))| if self.pattern.binding[j] { (dot(r, theta) + c).max(0.0) } else { 0.0 })
            .collect();
        let w = self
            .mw
            .iter()
            .zip(&self.w0)
            .enumerate()
            .map(|(i, (r, c))| if self.pattern.at_zero[i] { (dot(r, theta) + c).max(0.0) } else { 0.0 })
            .collect();
        KktPoint { x, w, v, active_x: self.pattern.at_zero.clone(), active_g: self.pattern.binding.clone() }
    }

    fn constraints(&self, prob: &BilevelProblem) -> (Vec<Constraint>, Vec<Constraint>) {
        let (eq, mut ineq) = prob.theta_constraints();
        ineq.extend(self.cuts.iter().map(|(c, _)| c.clone()));
        (eq, ineq)
    }

    /// `min ½‖θ − θ_t‖²` over Θ ∩ region, a lower bound on the outer
    /// objective there.
    fn lower_bound(&self, prob: &BilevelProblem) -> Option<f64> {
        let n = prob.n();
        let (eq, ineq) = self.constraints(prob);
        let g = identity(n);
        let a = prob.theta_t.iter().map(|v| -v).collect();
        let sol = solve_qp(&QpProblem { g, a, eq, ineq }).ok()?;
        Some((0.5 * dist2_sq(&sol.x, &prob.theta_t)).max(0.0))
    }
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

/// A region's optimum of the outer objective.
#[derive(Debug, Clone)]
pub struct PatternCandidate {
    pub theta: Vec<f64>,
    pub x: Vec<f64>,
    pub objective: f64,
    pub kkt: KktPoint,
}

fn solve_region(region: &AffineRegion, prob: &BilevelProblem) -> Option<PatternCandidate> {
    let n = prob.n();
    let eta = prob.eta;
    let (eq, ineq) = region.constraints(prob);
    // ½θᵀ(I + 2η MᵀM)θ − ⟨θ_t + 2η Mᵀ(y − x0), θ⟩.
    let resid: Vec<f64> = prob.y.iter().zip(&region.x0).map(|(y, x)| y - x).collect();
    let g: Vec<Vec<f64>> = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| {
                    let mtm: f64 = (0..n).map(|i| region.mx[i][a] * region.mx[i][b]).sum();
                    (a == b) as u8 as f64 + 2.0 * eta * mtm
                })
                .collect()
        })
        .collect();
    let lin: Vec<f64> = (0..n)
        .map(|a| -prob.theta_t[a] - 2.0 * eta * (0..n).map(|i| region.mx[i][a] * resid[i]).sum::<f64>())
        .collect();
    let sol = solve_qp(&QpProblem { g, a: lin, eq, ineq }).ok()?;
    let theta = sol.x;
    let kkt = region.kkt_at(&theta);
    let objective = 0.5 * dist2_sq(&theta, &prob.theta_t) + eta * dist2_sq(&prob.y, &kkt.x);
    Some(PatternCandidate { x: kkt.x.clone(), theta, objective, kkt })
}

/// Solves the outer problem restricted to one pattern's critical region.
///
/// `None` marks a degenerate pattern or one whose region misses Θ.
pub fn kkt_pattern_solve(pattern: &Pattern, prob: &BilevelProblem) -> Option<PatternCandidate> {
    let region = AffineRegion::build(pattern, prob)?;
    solve_region(&region, prob)
}

/// Result of one prediction-loss update.
#[derive(Debug, Clone)]
pub struct PreStep {
    pub theta: ParameterPoint,
    pub objective: f64,
    pub kkt: KktPoint,
    pub regions_explored: usize,
}

struct Node {
    bound: f64,
    seq: usize,
    region: AffineRegion,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // Min-heap on the bound, FIFO among equal bounds.
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then_with(|| other.seq.cmp(&self.seq))
    }
}

fn clean_theta(theta: &[f64], space: ParamSpace) -> Result<ParameterPoint> {
    match space {
        ParamSpace::Simplex => {
            let clipped: Vec<f64> = theta.iter().map(|v| v.max(0.0)).collect();
            let s: f64 = clipped.iter().sum();
            ParameterPoint::simplex(clipped.into_iter().map(|v| v / s).collect())
        }
        ParamSpace::Box { lo, hi } => ParameterPoint::in_box(theta.iter().map(|v| v.clamp(lo, hi)).collect(), lo, hi),
    }
}

/// Distance from θ_t to the hyperplane of a cut, measured inside the affine
/// hull of Θ. Zero when θ_t already violates the cut.
fn cut_distance(cut: &Constraint, prob: &BilevelProblem) -> f64 {
    let slack = dot(&cut.normal, &prob.theta_t) - cut.rhs;
    if slack <= 0.0 {
        return 0.0;
    }
    let normal: Vec<f64> = match prob.space {
        ParamSpace::Simplex => {
            let mean = cut.normal.iter().sum::<f64>() / cut.normal.len() as f64;
            cut.normal.iter().map(|v| v - mean).collect()
        }
        ParamSpace::Box { .. } => cut.normal.clone(),
    };
    let len = dot(&normal, &normal).sqrt();
    if len <= 1e-14 {
        f64::INFINITY
    } else {
        slack / len
    }
}

/// Global minimizer of the prediction-loss implicit update.
pub fn implicit_pre_search(prob: &BilevelProblem) -> Result<PreStep> {
    let n = prob.n();
    let start = active_set_qp(&prob.theta_t, &prob.p_diag, &prob.rows, &prob.rhs);
    let theta_t = clean_theta(&prob.theta_t, prob.space)?;
    let start_pattern = Pattern { at_zero: start.at_zero.clone(), binding: start.binding.clone() };
    let mut best = PreStep {
        objective: prob.eta * dist2_sq(&prob.y, &start.x),
        theta: theta_t,
        kkt: KktPoint {
            x: start.x.clone(),
            w: start.w.clone(),
            v: start.v.clone(),
            active_x: start.at_zero.clone(),
            active_g: start.binding.clone(),
        },
        regions_explored: 0,
    };
    if prob.eta == 0.0 {
        return Ok(best);
    }

    let mut visited: HashSet<Pattern> = HashSet::new();
    let mut heap = BinaryHeap::new();
    let mut seq = 0;
    let region = AffineRegion::build(&start_pattern, prob)
        .ok_or_else(|| Error::Solver("the forward pattern at θ_t is degenerate".into()))?;
    visited.insert(start_pattern);
    heap.push(Node { bound: 0.0, seq, region });

    while let Some(Node { bound, region, .. }) = heap.pop() {
        if bound >= best.objective {
            break;
        }
        best.regions_explored += 1;
        if let Some(cand) = solve_region(&region, prob) {
            if cand.objective < best.objective {
                best.objective = cand.objective;
                best.theta = clean_theta(&cand.theta, prob.space)?;
                best.kkt = cand.kkt;
            }
        }
        for (cut, flip) in &region.cuts {
            let d = cut_distance(cut, prob);
            if 0.5 * d * d >= best.objective {
                continue;
            }
            let next = region.pattern.flip(*flip);
            let mut candidates = Vec::new();
            if AffineRegion::build(&next, prob).is_some() {
                candidates.push(next);
            } else {
                // A degenerate flip: the neighbour swaps two pairs at once.
                for other in (0..n).map(Flip::Bound).chain((0..prob.m()).map(Flip::Row)) {
                    if other != *flip {
                        candidates.push(next.flip(other));
                    }
                }
            }
            for cand in candidates {
                if visited.contains(&cand) {
                    continue;
                }
                let Some(r) = AffineRegion::build(&cand, prob) else {
                    continue;
                };
                visited.insert(cand);
                if let Some(lb) = r.lower_bound(prob) {
                    if lb < best.objective {
                        seq += 1;
                        heap.push(Node { bound: lb, seq, region: r });
                    }
                }
            }
        }
    }
    Ok(best)
}

/// Exhaustive reference: optimum over every pattern (and θ_t itself).
pub fn implicit_pre_exhaustive(prob: &BilevelProblem) -> Result<PreStep> {
    let (n, m) = (prob.n(), prob.m());
    if n + m > 20 {
        return Err(Error::TooLarge(format!("2^{} patterns", n + m)));
    }
    let start = active_set_qp(&prob.theta_t, &prob.p_diag, &prob.rows, &prob.rhs);
    let mut best = PreStep {
        objective: prob.eta * dist2_sq(&prob.y, &start.x),
        theta: clean_theta(&prob.theta_t, prob.space)?,
        kkt: KktPoint { x: start.x.clone(), w: start.w, v: start.v, active_x: start.at_zero, active_g: start.binding },
        regions_explored: 0,
    };
    for bits in 0..(1u64 << (n + m)) {
        let pattern = Pattern::from_bits(n, m, bits);
        if let Some(c) = kkt_pattern_solve(&pattern, prob) {
            best.regions_explored += 1;
            if c.objective < best.objective {
                best.objective = c.objective;
                best.theta = clean_theta(&c.theta, prob.space)?;
                best.kkt = c.kkt;
            }
        }
    }
    Ok(best)
}

/// Exact update for the scalar agents, whose actions are piecewise
/// constant in θ.
fn implicit_pre_1d(theta_t: &ParameterPoint, eta: f64, inst: &Instance, y: f64) -> Result<ParameterPoint> {
    let ParamSpace::Box { lo: tlo, hi: thi } = theta_t.space() else {
        return Err(Error::Config("scalar agents need a box parameter space".into()));
    };
    let (Domain::Interval { lo, .. }, UtilityForm::Custom1d(kind)) = (&inst.domain, &inst.utility) else {
        return Err(Error::Config("scalar update needs a custom utility on an interval".into()));
    };
    let tt = theta_t.values()[0];
    // Breakpoints where the action jumps.
    let breaks: Vec<f64> = match kind {
        Custom1d::Obscuring => vec![-lo],
        Custom1d::Linear => vec![0.0],
    };
    let phi = |th: f64| -> Result<f64> {
        let x = solve(&[th], inst)?.x[0];
        Ok(0.5 * (th - tt) * (th - tt) + eta * (y - x) * (y - x))
    };
    let mut cands = vec![tt, tlo, thi];
    let mut edges = vec![tlo];
    edges.extend(breaks.iter().cloned().filter(|b| *b > tlo && *b < thi));
    edges.push(thi);
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        cands.push(tt.clamp(a, b));
        cands.extend([a, b]);
        // Open ends: the infimum may only be approached.
        let nudge = 1e-12 * (1.0 + a.abs().max(b.abs()));
        cands.extend([a + nudge, b - nudge]);
    }
    let mut best = (phi(tt)?, tt);
    for c in cands {
        if c < tlo || c > thi {
            continue;
        }
        let v = phi(c)?;
        if v < best.0 {
            best = (v, c);
        }
    }
    ParameterPoint::in_box(vec![best.1], tlo, thi)
}

/// One step of implicit online learning on the prediction loss.
pub fn implicit_pre_step(theta_t: &ParameterPoint, eta: f64, inst: &Instance, y: &[f64]) -> Result<ParameterPoint> {
    if let UtilityForm::Custom1d(_) = inst.utility {
        if y.len() != 1 {
            return Err(Error::Dimension("scalar agent needs a scalar observation".into()));
        }
        return implicit_pre_1d(theta_t, eta, inst, y[0]);
    }
    let prob = BilevelProblem::new(theta_t, eta, inst, y)?;
    Ok(implicit_pre_search(&prob)?.theta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn knapsack_problem(theta_t: Vec<f64>, eta: f64, y: Vec<f64>) -> BilevelProblem {
        let inst = Instance::new(
            1,
            UtilityForm::quad_diag(vec![0.5, 0.5]).unwrap(),
            Domain::cont_knapsack(vec![1.0, 2.0], 0.6).unwrap(),
        )
        .unwrap();
        BilevelProblem::new(&ParameterPoint::simplex(theta_t).unwrap(), eta, &inst, &y).unwrap()
    }

    #[test]
    fn interior_pattern_is_unconstrained_stationarity() {
        let prob = knapsack_problem(vec![0.5, 0.5], 0.1, vec![0.1, 0.1]);
        let pat = Pattern { at_zero: vec![false, false], binding: vec![false] };
        let region = AffineRegion::build(&pat, &prob).unwrap();
        // x = P⁻¹θ.
        assert_eq!(region.x_at(&[0.3, 0.7]), vec![0.6, 1.4]);
    }

    #[test]
    fn zero_coordinate_is_removed() {
        let prob = knapsack_problem(vec![0.5, 0.5], 0.1, vec![0.1, 0.1]);
        let pat = Pattern { at_zero: vec![true, false], binding: vec![true] };
        let region = AffineRegion::build(&pat, &prob).unwrap();
        let x = region.x_at(&[0.3, 0.7]);
        assert_eq!(x[0], 0.0);
        assert!((x[1] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn zero_step_keeps_theta() {
        let prob = knapsack_problem(vec![0.3, 0.7], 0.0, vec![0.1, 0.1]);
        let step = implicit_pre_search(&prob).unwrap();
        assert_eq!(step.theta.values(), &[0.3, 0.7]);
    }

    #[test]
    fn search_matches_exhaustive_on_small_case() {
        let prob = knapsack_problem(vec![0.9, 0.1], 5.0, vec![0.05, 0.25]);
        let a = implicit_pre_search(&prob).unwrap();
        let b = implicit_pre_exhaustive(&prob).unwrap();
        assert!((a.objective - b.objective).abs() < 1e-12, "{} vs {}", a.objective, b.objective);
        assert!(a.objective <= prob.objective(&prob.theta_t) + 1e-15);
    }
}
