//! The four inverse-learning losses, their hindsight minima and regret
//! bookkeeping.
//!
//! Only [`sim_subgradient`] is learner-facing. Everything else may read
//! θ_true and belongs to the evaluator.

use crate::domain::{c_map, objective, Instance, NoiseMode, Observation, ParamSpace, ParameterPoint};
use crate::error::{Error, Result};
use crate::forward::solve;
use crate::vecops::{dist2_sq, dot, sub};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossKind {
    Pre,
    Sub,
    Est,
    Sim,
}

impl LossKind {
    pub const ALL: [LossKind; 4] = [LossKind::Pre, LossKind::Sub, LossKind::Est, LossKind::Sim];

    pub fn name(&self) -> &'static str {
        match self {
            LossKind::Pre => "pre",
            LossKind::Sub => "sub",
            LossKind::Est => "est",
            LossKind::Sim => "sim",
        }
    }

    fn index(&self) -> usize {
        *self as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossRecord {
    pub t: usize,
    pub l_pre: f64,
    pub l_sub: f64,
    pub l_est: f64,
    pub l_sim: f64,
    /// Gradient of the (linear) simple loss; free of θ_true.
    pub s_t: Vec<f64>,
    pub x_pred: Vec<f64>,
    pub y: Vec<f64>,
}

impl LossRecord {
    pub fn get(&self, kind: LossKind) -> f64 {
        match kind {
            LossKind::Pre => self.l_pre,
            LossKind::Sub => self.l_sub,
            LossKind::Est => self.l_est,
            LossKind::Sim => self.l_sim,
        }
    }
}

/// `c(y) − c(x_pred)`.
pub fn sim_subgradient(x_pred: &[f64], y: &[f64], inst: &Instance) -> Result<Vec<f64>> {
    Ok(sub(&c_map(y, &inst.utility)?, &c_map(x_pred, &inst.utility)?))
}

/// All four losses at an arbitrary θ, given `x(θ)` and the learner's
/// current prediction `x(θ_t)` (which fixes the simple loss's slope).
///
/// Returned in `[pre, sub, est, sim]` order.
pub fn losses_at(
    theta: &[f64],
    x_theta: &[f64],
    x_t: &[f64],
    inst: &Instance,
    y: &[f64],
    theta_true: &[f64],
) -> Result<[f64; 4]> {
    let u = &inst.utility;
    let pre = dist2_sq(y, x_theta);
    let sub_loss = objective(y, theta, u)? - objective(x_theta, theta, u)?;
    let est = objective(x_theta, theta_true, u)? - objective(y, theta_true, u)?;
    let s = sim_subgradient(x_t, y, inst)?;
    let sim = dot(&sub(theta, theta_true), &s);
    Ok([pre, sub_loss, est, sim])
}

/// Losses at `θ_t` when the prediction `x(θ_t; u_t)` is already known.
pub fn eval_losses_from_prediction(
    theta_t: &[f64],
    x_pred: &[f64],
    inst: &Instance,
    y: &[f64],
    theta_true: &[f64],
) -> Result<LossRecord> {
    let [l_pre, l_sub, l_est, l_sim] = losses_at(theta_t, x_pred, x_pred, inst, y, theta_true)?;
    Ok(LossRecord {
        t: inst.t,
        l_pre,
        l_sub,
        l_est,
        l_sim,
        s_t: sim_subgradient(x_pred, y, inst)?,
        x_pred: x_pred.to_vec(),
        y: y.to_vec(),
    })
}

/// Solves for `x(θ_t; u_t)` and evaluates all four losses.
pub fn eval_losses(
    theta_t: &ParameterPoint,
    inst: &Instance,
    y: &Observation,
    theta_true: &ParameterPoint,
) -> Result<LossRecord> {
    let x_pred = solve(theta_t.values(), inst)?;
    if !x_pred.is_optimal() {
        return Err(Error::Solver(format!("forward solve ended with {:?}", x_pred.status)));
    }
    eval_losses_from_prediction(theta_t.values(), &x_pred.x, inst, &y.y, theta_true.values())
}

/// `min_{θ∈Θ} ⟨θ, v⟩`.
pub fn linear_min(v: &[f64], space: ParamSpace) -> f64 {
    match space {
        ParamSpace::Simplex => v.iter().cloned().fold(f64::INFINITY, f64::min),
        ParamSpace::Box { lo, hi } => v.iter().map(|&s| (lo * s).min(hi * s)).sum(),
    }
}

/// Hindsight minimum `min_θ Σ_t ℓ_t(θ)` over the whole history.
///
/// With perfect information θ_true attains zero for the three
/// action-based losses. With noise those minima are bilevel programs and
/// are refused.
pub fn offline_min(
    kind: LossKind,
    history: &[LossRecord],
    space: ParamSpace,
    theta_true: &[f64],
    mode: NoiseMode,
) -> Result<f64> {
    if history.is_empty() {
        return Ok(0.0);
    }
    match kind {
        LossKind::Sim => {
            let mut total = vec![0.0; theta_true.len()];
            for r in history {
                for (a, b) in total.iter_mut().zip(&r.s_t) {
                    *a += b;
                }
            }
            Ok(linear_min(&total, space) - dot(theta_true, &total))
        }
        _ if mode.is_perfect() => Ok(0.0),
        _ => Err(Error::UnsupportedMode(format!(
            "exact offline minimum of the {} loss under noisy observations",
            kind.name()
        ))),
    }
}

/// `offline_min` for every prefix `1..=T` in one pass; `None` where the
/// minimum is unavailable.
pub fn prefix_offline_mins(
    kind: LossKind,
    history: &[LossRecord],
    space: ParamSpace,
    theta_true: &[f64],
    mode: NoiseMode,
) -> Vec<Option<f64>> {
    match kind {
        LossKind::Sim => {
            let mut total = vec![0.0; theta_true.len()];
            history
                .iter()
                .map(|r| {
                    for (a, b) in total.iter_mut().zip(&r.s_t) {
                        *a += b;
                    }
                    Some(linear_min(&total, space) - dot(theta_true, &total))
                })
                .collect()
        }
        _ if mode.is_perfect() => vec![Some(0.0); history.len()],
        _ => vec![None; history.len()],
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LossSeries {
    pub cumulative: Vec<f64>,
    pub offline_min: Vec<Option<f64>>,
    /// `(cumulative − offline_min) / t`.
    pub avg_regret: Vec<Option<f64>>,
}

impl LossSeries {
    pub fn regret(&self, t: usize) -> Option<f64> {
        self.offline_min[t].map(|m| self.cumulative[t] - m)
    }

    pub fn final_regret(&self) -> Option<f64> {
        self.cumulative.len().checked_sub(1).and_then(|t| self.regret(t))
    }
}

/// Per-step losses and running regrets of one learner trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    pub instance: usize,
    pub records: Vec<LossRecord>,
    pub series: [LossSeries; 4],
    /// Losses recomputed with `y_t` replaced by the true action, present
    /// only for noisy runs.
    pub attrue: Option<(Vec<LossRecord>, [LossSeries; 4])>,
    /// Wall-clock time of each learner update in milliseconds.
    pub step_ms: Vec<f64>,
}

impl RegretTrace {
    pub fn series(&self, kind: LossKind) -> &LossSeries {
        &self.series[kind.index()]
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

fn build_series(records: &[LossRecord], kind: LossKind, mins: Vec<Option<f64>>) -> LossSeries {
    let mut acc = 0.0;
    let cumulative: Vec<f64> = records
        .iter()
        .map(|r| {
            acc += r.get(kind);
            acc
        })
        .collect();
    let avg_regret =
        cumulative.iter().zip(&mins).enumerate().map(|(i, (c, m))| m.map(|m| (c - m) / (i + 1) as f64)).collect();
    LossSeries { cumulative, offline_min: mins, avg_regret }
}

/// Offline minima for all four losses, in `[pre, sub, est, sim]` order.
pub fn all_offline_mins(
    records: &[LossRecord],
    space: ParamSpace,
    theta_true: &[f64],
    mode: NoiseMode,
) -> [Vec<Option<f64>>; 4] {
    LossKind::ALL.map(|k| prefix_offline_mins(k, records, space, theta_true, mode))
}

pub fn build_series_set(records: &[LossRecord], offline: [Vec<Option<f64>>; 4]) -> Result<[LossSeries; 4]> {
    if offline.iter().any(|m| m.len() != records.len()) {
        return Err(Error::Dimension("offline minima and loss records differ in length".into()));
    }
    let mut it = offline.into_iter();
    Ok(LossKind::ALL.map(|k| build_series(records, k, it.next().expect("four loss kinds"))))
}

pub fn build_regret_trace(
    instance: usize,
    records: Vec<LossRecord>,
    offline: [Vec<Option<f64>>; 4],
    step_ms: Vec<f64>,
) -> Result<RegretTrace> {
    if step_ms.len() != records.len() {
        return Err(Error::Dimension("timings and loss records differ in length".into()));
    }
    let series = build_series_set(&records, offline)?;
    Ok(RegretTrace { instance, records, series, attrue: None, step_ms })
}

/// `R^sim ≥ R^sub + R^est ≥ 0` and `R^sub + R^est = Σ ℓ^sim(θ_t)` at every
/// prefix. Only meaningful with perfect information.
pub fn check_proposition1(trace: &RegretTrace, tol: f64) -> Result<()> {
    let (sub_s, est_s, sim_s) = (trace.series(LossKind::Sub), trace.series(LossKind::Est), trace.series(LossKind::Sim));
    for t in 0..trace.len() {
        let (Some(rs), Some(re), Some(rm)) = (sub_s.regret(t), est_s.regret(t), sim_s.regret(t)) else {
            return Err(Error::UnsupportedMode("regrets unavailable for the bound check".into()));
        };
        let lhs = rs + re;
        if lhs < -tol || rm < lhs - tol || (lhs - sim_s.cumulative[t]).abs() > tol {
            return Err(Error::Invariant(format!(
                "instance {} step {}: R_sim = {rm}, R_sub + R_est = {lhs}, Σ sim = {}",
                trace.instance,
                t + 1,
                sim_s.cumulative[t]
            )));
        }
    }
    Ok(())
}

/// `R^sub ≥ (γ/2) R^pre` with γ the strong convexity modulus.
pub fn check_corollary1(trace: &RegretTrace, gamma: f64, tol: f64) -> Result<()> {
    let (pre_s, sub_s) = (trace.series(LossKind::Pre), trace.series(LossKind::Sub));
    for t in 0..trace.len() {
        let (Some(rp), Some(rs)) = (pre_s.regret(t), sub_s.regret(t)) else {
            return Err(Error::UnsupportedMode("regrets unavailable for the bound check".into()));
        };
        if rs < 0.5 * gamma * rp - tol {
            return Err(Error::Invariant(format!(
                "instance {} step {}: R_sub = {rs} < γ/2 · R_pre = {}",
                trace.instance,
                t + 1,
                0.5 * gamma * rp
            )));
        }
    }
    Ok(())
}
