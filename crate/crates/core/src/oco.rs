//! Proximal setups, step-size schedules and the two learners driven by the
//! simple loss: online mirror descent and implicit online learning.

use crate::domain::{Custom1d, Domain, Instance, ParamSpace, ParameterPoint, UtilityForm};
use crate::error::{Error, Result};
use crate::forward::THETA_FLOOR;
use crate::qp::{solve_qp, Constraint, QpProblem};

/// Entropy iterates are kept at least this far from the simplex boundary.
pub const INTERIOR_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Geometry {
    /// Negative entropy on the simplex; the prox step is multiplicative.
    EntropySimplex,
    EuclidSimplex,
    EuclidBox {
        lo: f64,
        hi: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxSetup {
    pub geometry: Geometry,
    /// Largest Bregman distance from the prox center.
    pub omega: f64,
    /// Largest Bregman distance between two points of Θ.
    pub omega_hat: f64,
    /// Bound on the dual norm of every subgradient.
    pub g: f64,
}

impl ProxSetup {
    pub fn entropy(p: usize, g: f64) -> Self {
        let omega = (p as f64).ln().max(f64::MIN_POSITIVE);
        ProxSetup { geometry: Geometry::EntropySimplex, omega, omega_hat: omega, g }
    }

    pub fn euclid_simplex(p: usize, g: f64) -> Self {
        ProxSetup {
            geometry: Geometry::EuclidSimplex,
            omega: 0.5 * (1.0 - 1.0 / p as f64).max(f64::MIN_POSITIVE),
            omega_hat: 1.0,
            g,
        }
    }

    pub fn euclid_box(p: usize, lo: f64, hi: f64, g: f64) -> Self {
        let w = hi - lo;
        ProxSetup {
            geometry: Geometry::EuclidBox { lo, hi },
            omega: 0.125 * p as f64 * w * w,
            omega_hat: 0.5 * p as f64 * w * w,
            g,
        }
    }

    pub fn space(&self) -> ParamSpace {
        match self.geometry {
            Geometry::EntropySimplex | Geometry::EuclidSimplex => ParamSpace::Simplex,
            Geometry::EuclidBox { lo, hi } => ParamSpace::Box { lo, hi },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepSchedule {
    /// `2Ω / (G² T)`, the constant as printed.
    MdConstantPaper { omega: f64, g: f64, horizon: usize },
    /// `√(2Ω / (G² T))`, the constant that yields the `√(2ΩG²T)` bound.
    MdConstantOptimal { omega: f64, g: f64, horizon: usize },
    /// `(√Ω̂ / G) / √t`.
    ImplicitSqrt { omega_hat: f64, g: f64 },
    /// `η_t` is the `t`-th entry (1-based).
    Custom(Vec<f64>),
}

/// Schedule family before the setup constants are known.
#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleKind {
    Paper,
    Optimal,
    Sqrt,
    Custom(Vec<f64>),
}

impl ScheduleKind {
    pub fn build(&self, setup: &ProxSetup, horizon: usize) -> StepSchedule {
        let (omega, omega_hat, g) = (setup.omega, setup.omega_hat, setup.g);
        match self {
            ScheduleKind::Paper => StepSchedule::MdConstantPaper { omega, g, horizon },
            ScheduleKind::Optimal => StepSchedule::MdConstantOptimal { omega, g, horizon },
            ScheduleKind::Sqrt => StepSchedule::ImplicitSqrt { omega_hat, g },
            ScheduleKind::Custom(v) => StepSchedule::Custom(v.clone()),
        }
    }
}

pub fn step_value(schedule: &StepSchedule, t: usize) -> Result<f64> {
    if t == 0 {
        return Err(Error::Config("steps are numbered from 1".into()));
    }
    let eta = match schedule {
        StepSchedule::MdConstantPaper { omega, g, horizon } => 2.0 * omega / (g * g * *horizon as f64),
        StepSchedule::MdConstantOptimal { omega, g, horizon } => (2.0 * omega / (g * g * *horizon as f64)).sqrt(),
        StepSchedule::ImplicitSqrt { omega_hat, g } => omega_hat.sqrt() / g / (t as f64).sqrt(),
        StepSchedule::Custom(v) => *v
            .get(t - 1)
            .ok_or_else(|| Error::Config(format!("custom schedule has {} entries, step {t} requested", v.len())))?,
    };
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::Config(format!("step size {eta} at t = {t} is not positive")));
    }
    Ok(eta)
}

/// Euclidean projection onto the unit simplex by sorting and thresholding.
pub fn project_simplex(v: &[f64]) -> Result<ParameterPoint> {
    if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidPoint("cannot project an empty or non-finite vector".into()));
    }
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut tau = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        acc += uk;
        let cand = (acc - 1.0) / (k + 1) as f64;
        if uk - cand > 0.0 {
            tau = cand;
        }
    }
    let mut x: Vec<f64> = v.iter().map(|&vi| (vi - tau).max(0.0)).collect();
    let s: f64 = x.iter().sum();
    for xi in x.iter_mut() {
        *xi /= s;
    }
    ParameterPoint::simplex(x)
}

fn entropy_prox(theta: &[f64], xi: &[f64]) -> Result<ParameterPoint> {
    let logits: Vec<f64> = theta.iter().zip(xi).map(|(t, x)| t.max(INTERIOR_FLOOR).ln() - x).collect();
    let top = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = logits.iter().map(|l| (l - top).exp()).collect();
    let s: f64 = w.iter().sum();
    for wi in w.iter_mut() {
        *wi = (*wi / s).max(INTERIOR_FLOOR);
    }
    let s: f64 = w.iter().sum();
    for wi in w.iter_mut() {
        *wi /= s;
    }
    ParameterPoint::simplex(w)
}

/// `argmin_θ' ⟨ξ, θ'⟩ + V_θ(θ')` over Θ.
pub fn prox_map(theta: &ParameterPoint, xi: &[f64], setup: &ProxSetup) -> Result<ParameterPoint> {
    if xi.len() != theta.dim() {
        return Err(Error::Dimension(format!("step has {} coordinates, θ {}", xi.len(), theta.dim())));
    }
    if xi.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalGuard("non-finite prox step".into()));
    }
    match setup.geometry {
        Geometry::EntropySimplex => entropy_prox(theta.values(), xi),
        Geometry::EuclidSimplex => {
            let v: Vec<f64> = theta.values().iter().zip(xi).map(|(t, x)| t - x).collect();
            project_simplex(&v)
        }
        Geometry::EuclidBox { lo, hi } => {
            let v = theta.values().iter().zip(xi).map(|(t, x)| (t - x).clamp(lo, hi)).collect();
            ParameterPoint::in_box(v, lo, hi)
        }
    }
}

/// `θ_{t+1} = Prox_{θ_t}(η_t s_t)`.
pub fn md_step(
    theta: &ParameterPoint,
    s: &[f64],
    t: usize,
    schedule: &StepSchedule,
    setup: &ProxSetup,
) -> Result<ParameterPoint> {
    let eta = step_value(schedule, t)?;
    let xi: Vec<f64> = s.iter().map(|v| eta * v).collect();
    prox_map(theta, &xi, setup)
}

/// `argmin_θ ½‖θ − θ_t‖² + η_t ⟨θ − θ_true, s_t⟩` over Θ, solved as a QP.
///
/// The θ_true term is constant in θ and does not enter the oracle.
pub fn implicit_sim_step(
    theta: &ParameterPoint,
    s: &[f64],
    t: usize,
    schedule: &StepSchedule,
) -> Result<ParameterPoint> {
    let eta = step_value(schedule, t)?;
    let p = theta.dim();
    if s.len() != p {
        return Err(Error::Dimension(format!("subgradient has {} coordinates, θ {p}", s.len())));
    }
    let identity = (0..p).map(|i| (0..p).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let a = theta.values().iter().zip(s).map(|(th, si)| eta * si - th).collect();
    let unit = |i: usize, sign: f64| -> Vec<f64> {
        let mut e = vec![0.0; p];
        e[i] = sign;
        e
    };
    let (eq, ineq) = match theta.space() {
        ParamSpace::Simplex => {
            (vec![Constraint::new(vec![1.0; p], 1.0)], (0..p).map(|i| Constraint::new(unit(i, 1.0), 0.0)).collect())
        }
        ParamSpace::Box { lo, hi } => (
            vec![],
            (0..p).flat_map(|i| [Constraint::new(unit(i, 1.0), lo), Constraint::new(unit(i, -1.0), -hi)]).collect(),
        ),
    };
    let sol = solve_qp(&QpProblem { g: identity, a, eq, ineq })?;
    let x = match theta.space() {
        ParamSpace::Simplex => {
            let clipped: Vec<f64> = sol.x.iter().map(|v| v.max(0.0)).collect();
            let total: f64 = clipped.iter().sum();
            clipped.into_iter().map(|v| v / total).collect()
        }
        ParamSpace::Box { lo, hi } => sol.x.iter().map(|v| v.clamp(lo, hi)).collect(),
    };
    theta.with_values(x)
}

/// Per-coordinate bound on `|c_i(x)|` over an instance's domain.
fn c_bound(inst: &Instance) -> f64 {
    let bounds = inst.domain.coordinate_bounds();
    let top = bounds.iter().cloned().fold(0.0_f64, f64::max);
    match &inst.utility {
        UtilityForm::QuadDiag { .. } | UtilityForm::Bilinear => top,
        UtilityForm::Ces => top * top,
        UtilityForm::CobbDouglas { floor } => {
            // Predicted goods never fall below the θ-floor share of the budget.
            let bottom = match &inst.domain {
                Domain::ContKnapsack { prices, budget } => {
                    let n = prices.len() as f64;
                    prices
                        .iter()
                        .map(|p| THETA_FLOOR * budget / (p * (1.0 + n * THETA_FLOOR)))
                        .fold(f64::INFINITY, f64::min)
                }
                _ => *floor,
            };
            top.max(1.0).ln().abs().max(bottom.max(*floor).ln().abs())
        }
        UtilityForm::Custom1d(Custom1d::Obscuring) => 1.0,
        UtilityForm::Custom1d(Custom1d::Linear) => top,
    }
}

/// `G = 2 max_t max_x ‖c(x)‖_∞` over the domains of a stream.
pub fn lipschitz_bound(instances: &[Instance]) -> f64 {
    let g = 2.0 * instances.iter().map(c_bound).fold(0.0_f64, f64::max);
    if g > 0.0 {
        g
    } else {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn step_values() {
        let s = StepSchedule::ImplicitSqrt { omega_hat: 1.0, g: 2.0 };
        assert_eq!(step_value(&s, 4).unwrap(), 0.25);
        let s = StepSchedule::MdConstantOptimal { omega: 2f64.ln(), g: 1.0, horizon: 100 };
        assert_eq!(step_value(&s, 7).unwrap(), (2.0 * 2f64.ln() / 100.0).sqrt());
        let s = StepSchedule::MdConstantPaper { omega: 2f64.ln(), g: 1.0, horizon: 100 };
        assert_eq!(step_value(&s, 1).unwrap(), 2.0 * 2f64.ln() / 100.0);
        let s = StepSchedule::Custom(vec![1.0, 0.5, 1.0 / 3.0]);
        assert_eq!(step_value(&s, 2).unwrap(), 0.5);
        assert!(step_value(&s, 4).is_err());
        assert!(step_value(&s, 0).is_err());
    }

    #[test]
    fn projection_examples() {
        assert_eq!(project_simplex(&[0.6, 0.6]).unwrap().values(), &[0.5, 0.5]);
        assert_eq!(project_simplex(&[1.5, -0.2]).unwrap().values(), &[1.0, 0.0]);
        assert_eq!(project_simplex(&[0.25, 0.75]).unwrap().values(), &[0.25, 0.75]);
    }

    #[test]
    fn entropy_prox_example() {
        let theta = ParameterPoint::uniform(2);
        let setup = ProxSetup::entropy(2, 1.0);
        let next = prox_map(&theta, &[2f64.ln(), 0.0], &setup).unwrap();
        assert_abs_diff_eq!(next.values()[0], 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(next.values()[1], 2.0 / 3.0, epsilon = 1e-15);
        assert_eq!(prox_map(&theta, &[0.0, 0.0], &setup).unwrap(), theta);
    }

    #[test]
    fn box_prox_is_clamped_gradient_step() {
        let theta = ParameterPoint::in_box(vec![3.0], -3.0, 3.0).unwrap();
        let setup = ProxSetup::euclid_box(1, -3.0, 3.0, 2.0);
        assert_eq!(prox_map(&theta, &[1.0], &setup).unwrap().values(), &[2.0]);
        assert_eq!(prox_map(&theta, &[-1.0], &setup).unwrap().values(), &[3.0]);
    }

    #[test]
    fn implicit_step_examples() {
        let theta = ParameterPoint::simplex(vec![0.5, 0.5]).unwrap();
        let sched = StepSchedule::Custom(vec![0.1]);
        let next = implicit_sim_step(&theta, &[1.0, -1.0], 1, &sched).unwrap();
        assert_abs_diff_eq!(next.values()[0], 0.4, epsilon = 1e-14);
        assert_abs_diff_eq!(next.values()[1], 0.6, epsilon = 1e-14);
        assert_eq!(implicit_sim_step(&theta, &[0.0, 0.0], 1, &sched).unwrap(), theta);
    }
}
