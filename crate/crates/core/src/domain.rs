//! Shared domain types: parameter spaces, utility forms, agent domains,
//! per-step instances and observations.
//!
//! Every utility form is written as the negative utility the agent
//! *minimizes*, decomposed as
//!
//! ```text
//! f(x; θ, u) = f1(x; u) + ⟨θ, c(x)⟩
//! ```
//!
//! The θ-only term is identically zero for all built-in forms, so it has no
//! representation here. The parameter dimension equals the action dimension.

use crate::error::{Error, Result};
use crate::vecops::dot;

/// Tolerance used when validating that a point lies on the unit simplex.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Default floor applied to goods before taking logarithms in the
/// Cobb-Douglas form.
pub const COBB_DOUGLAS_FLOOR: f64 = 1e-12;

/// The learner's parameter domain Θ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamSpace {
    /// `{θ ≥ 0 : Σθ = 1}`.
    Simplex,
    /// `[lo, hi]^p`.
    Box { lo: f64, hi: f64 },
}

impl ParamSpace {
    pub fn is_simplex(&self) -> bool {
        matches!(self, ParamSpace::Simplex)
    }
}

/// A candidate θ together with the space it lives in.
///
/// Construction validates membership, so a `ParameterPoint` is always
/// inside its space.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterPoint {
    values: Vec<f64>,
    space: ParamSpace,
}

impl ParameterPoint {
    pub fn new(values: Vec<f64>, space: ParamSpace) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidPoint("empty parameter vector".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidPoint(format!("non-finite coordinate {v}")));
        }
        match space {
            ParamSpace::Simplex => {
                if let Some(v) = values.iter().find(|&&v| v < 0.0) {
                    return Err(Error::InvalidPoint(format!("negative simplex coordinate {v}")));
                }
                let s: f64 = values.iter().sum();
                if (s - 1.0).abs() > SIMPLEX_TOL {
                    return Err(Error::InvalidPoint(format!("simplex coordinates sum to {s}")));
                }
            }
            ParamSpace::Box { lo, hi } => {
                if !(lo < hi) {
                    return Err(Error::InvalidPoint(format!("empty box [{lo}, {hi}]")));
                }
                if let Some(v) = values.iter().find(|&&v| v < lo || v > hi) {
                    return Err(Error::InvalidPoint(format!("coordinate {v} outside [{lo}, {hi}]")));
                }
            }
        }
        Ok(ParameterPoint { values, space })
    }

    pub fn simplex(values: Vec<f64>) -> Result<Self> {
        Self::new(values, ParamSpace::Simplex)
    }

    pub fn in_box(values: Vec<f64>, lo: f64, hi: f64) -> Result<Self> {
        Self::new(values, ParamSpace::Box { lo, hi })
    }

    /// The barycenter of the simplex, `1/p` in every coordinate.
    pub fn uniform(p: usize) -> Self {
        assert!(p > 0, "simplex dimension must be positive");
        ParameterPoint { values: vec![1.0 / p as f64; p], space: ParamSpace::Simplex }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn space(&self) -> ParamSpace {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Replaces the coordinates, keeping the space. Validates like `new`.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(values, self.space)
    }
}

/// The two scalar agents used to illustrate degenerate `c` maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Custom1d {
    /// `f(x) = x + θ·c(x)` with `c(x) = -1` at `x = 0` and `0` elsewhere.
    /// `c` hides everything about `x` except whether it is zero.
    Obscuring,
    /// `f(x) = θ·x`, i.e. `c(x) = x` with no θ-free part.
    Linear,
}

/// The agent's objective family.
#[derive(Debug, Clone, PartialEq)]
pub enum UtilityForm {
    /// `½ xᵀ diag(P) x − ⟨θ, x⟩`.
    QuadDiag {
        p: Vec<f64>,
    },
    /// CES with ρ = 2 written for minimization: `Σ θ_i x_i²`.
    Ces,
    /// `−⟨θ, x⟩`.
    Bilinear,
    /// `−Σ θ_i log x_i`; goods below `floor` are raised to it.
    CobbDouglas {
        floor: f64,
    },
    Custom1d(Custom1d),
}

impl UtilityForm {
    pub fn quad_diag(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::Config("empty quadratic diagonal".into()));
        }
        if let Some(v) = p.iter().find(|&&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::Config(format!("quadratic diagonal entry {v} is not positive")));
        }
        Ok(UtilityForm::QuadDiag { p })
    }

    pub fn cobb_douglas() -> Self {
        UtilityForm::CobbDouglas { floor: COBB_DOUGLAS_FLOOR }
    }

    /// Dimension fixed by the form itself, if any.
    pub fn fixed_dim(&self) -> Option<usize> {
        match self {
            UtilityForm::QuadDiag { p } => Some(p.len()),
            UtilityForm::Custom1d(_) => Some(1),
            _ => None,
        }
    }

    /// Strong convexity modulus of `f(·; θ)` in `x`, when there is one.
    pub fn strong_convexity(&self) -> Option<f64> {
        match self {
            UtilityForm::QuadDiag { p } => Some(p.iter().cloned().fold(f64::INFINITY, f64::min)),
            _ => None,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            UtilityForm::QuadDiag { .. } => "quad",
            UtilityForm::Ces => "ces",
            UtilityForm::Bilinear => "bilinear",
            UtilityForm::CobbDouglas { .. } => "cobb",
            UtilityForm::Custom1d(_) => "custom",
        }
    }

    /// The θ-free part `f1(x)`.
    pub fn f1(&self, x: &[f64]) -> Result<f64> {
        Ok(match self {
            UtilityForm::QuadDiag { p } => {
                check_len(x.len(), p.len(), "x vs quadratic diagonal")?;
                0.5 * p.iter().zip(x).map(|(pi, xi)| pi * xi * xi).sum::<f64>()
            }
            UtilityForm::Custom1d(Custom1d::Obscuring) => {
                check_len(x.len(), 1, "scalar agent")?;
                x[0]
            }
            UtilityForm::Custom1d(Custom1d::Linear) => {
                check_len(x.len(), 1, "scalar agent")?;
                0.0
            }
            UtilityForm::Ces | UtilityForm::Bilinear | UtilityForm::CobbDouglas { .. } => 0.0,
        })
    }
}

/// The vector `c(x)` paired with θ in the objective.
pub fn c_map(x: &[f64], utility: &UtilityForm) -> Result<Vec<f64>> {
    if let Some(v) = x.iter().find(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("non-finite action coordinate {v}")));
    }
    match utility {
        UtilityForm::QuadDiag { p } => {
            check_len(x.len(), p.len(), "x vs quadratic diagonal")?;
            Ok(x.iter().map(|v| -v).collect())
        }
        UtilityForm::Bilinear => Ok(x.iter().map(|v| -v).collect()),
        UtilityForm::Ces => Ok(x.iter().map(|v| v * v).collect()),
        UtilityForm::CobbDouglas { floor } => x
            .iter()
            .map(|&v| {
                if v <= 0.0 {
                    Err(Error::Domain(format!("Cobb-Douglas needs positive goods, got {v}")))
                } else {
                    Ok(-(v.max(*floor)).ln())
                }
            })
            .collect(),
        UtilityForm::Custom1d(kind) => {
            check_len(x.len(), 1, "scalar agent")?;
            Ok(vec![match kind {
                Custom1d::Obscuring => {
                    if x[0] == 0.0 {
                        -1.0
                    } else {
                        0.0
                    }
                }
                Custom1d::Linear => x[0],
            }])
        }
    }
}

/// `f(x; θ) = f1(x) + ⟨θ, c(x)⟩` for a bare utility form.
pub fn objective(x: &[f64], theta: &[f64], utility: &UtilityForm) -> Result<f64> {
    let c = c_map(x, utility)?;
    check_len(theta.len(), c.len(), "θ vs c(x)")?;
    Ok(utility.f1(x)? + dot(theta, &c))
}

/// `f(x; θ, u_t)` for the instance's utility.
pub fn eval_f(x: &[f64], theta: &ParameterPoint, inst: &Instance) -> Result<f64> {
    check_len(x.len(), inst.n, "x vs instance")?;
    objective(x, theta.values(), &inst.utility)
}

/// The agent's feasible region for one step.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    /// `{x ≥ 0 : ⟨p, x⟩ ≤ b}`.
    ContKnapsack { prices: Vec<f64>, budget: f64 },
    /// `{x ≥ 0 : A x ≤ c}`, `rows` holds A row by row.
    Polytope { rows: Vec<Vec<f64>>, rhs: Vec<f64> },
    /// `{x ∈ {0,1}^n : ⟨p, x⟩ ≤ b}`.
    BinKnapsack { prices: Vec<f64>, budget: f64 },
    /// `{x ≥ 0 : ⟨p, x⟩ = b}`.
    EqKnapsack { prices: Vec<f64>, budget: f64 },
    /// `[lo, hi]`, scalar actions only.
    Interval { lo: f64, hi: f64 },
}

fn check_prices(prices: &[f64], budget: f64) -> Result<()> {
    if prices.is_empty() {
        return Err(Error::Config("empty price vector".into()));
    }
    if let Some(p) = prices.iter().find(|&&p| !(p > 0.0 && p.is_finite())) {
        return Err(Error::Config(format!("price {p} is not positive")));
    }
    if !(budget > 0.0 && budget.is_finite()) {
        return Err(Error::Config(format!("budget {budget} is not positive")));
    }
    Ok(())
}

impl Domain {
    pub fn cont_knapsack(prices: Vec<f64>, budget: f64) -> Result<Self> {
        check_prices(&prices, budget)?;
        Ok(Domain::ContKnapsack { prices, budget })
    }

    pub fn bin_knapsack(prices: Vec<f64>, budget: f64) -> Result<Self> {
        check_prices(&prices, budget)?;
        Ok(Domain::BinKnapsack { prices, budget })
    }

    pub fn eq_knapsack(prices: Vec<f64>, budget: f64) -> Result<Self> {
        check_prices(&prices, budget)?;
        Ok(Domain::EqKnapsack { prices, budget })
    }

    pub fn polytope(rows: Vec<Vec<f64>>, rhs: Vec<f64>) -> Result<Self> {
        if rows.is_empty() || rows.len() != rhs.len() {
            return Err(Error::Dimension(format!(
                "polytope has {} rows but {} right-hand sides",
                rows.len(),
                rhs.len()
            )));
        }
        let n = rows[0].len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("ragged or empty polytope rows".into()));
        }
        if rows.iter().flatten().any(|&a| !(a >= 0.0 && a.is_finite())) {
            return Err(Error::Config("polytope matrix must be nonnegative".into()));
        }
        if rhs.iter().any(|&c| !(c > 0.0 && c.is_finite())) {
            return Err(Error::Config("polytope right-hand side must be positive".into()));
        }
        for i in 0..n {
            if rows.iter().all(|r| r[i] == 0.0) {
                return Err(Error::Config(format!("polytope is unbounded along coordinate {i}")));
            }
        }
        Ok(Domain::Polytope { rows, rhs })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Config(format!("empty interval [{lo}, {hi}]")));
        }
        Ok(Domain::Interval { lo, hi })
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::ContKnapsack { prices, .. }
            | Domain::BinKnapsack { prices, .. }
            | Domain::EqKnapsack { prices, .. } => prices.len(),
            Domain::Polytope { rows, .. } => rows[0].len(),
            Domain::Interval { .. } => 1,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Domain::ContKnapsack { .. } => "ck",
            Domain::Polytope { .. } => "cp",
            Domain::BinKnapsack { .. } => "bk",
            Domain::EqKnapsack { .. } => "eck",
            Domain::Interval { .. } => "interval",
        }
    }

    pub fn is_continuous(&self) -> bool {
        !matches!(self, Domain::BinKnapsack { .. })
    }

    /// Largest violation of any constraint at `x` (0 when feasible).
    ///
    /// Binary domains also count the distance of each coordinate to {0, 1}.
    pub fn infeasibility(&self, x: &[f64]) -> f64 {
        if x.len() != self.dim() {
            return f64::INFINITY;
        }
        let neg = x.iter().fold(0.0_f64, |m, &v| m.max(-v));
        match self {
            Domain::ContKnapsack { prices, budget } => neg.max(dot(prices, x) - budget),
            Domain::EqKnapsack { prices, budget } => neg.max((dot(prices, x) - budget).abs()),
            Domain::BinKnapsack { prices, budget } => {
                let integrality = x.iter().fold(0.0_f64, |m, &v| m.max(v.abs().min((v - 1.0).abs())));
                neg.max(dot(prices, x) - budget).max(integrality)
            }
            Domain::Polytope { rows, rhs } => rows.iter().zip(rhs).fold(neg, |m, (r, c)| m.max(dot(r, x) - c)),
            Domain::Interval { lo, hi } => (lo - x[0]).max(x[0] - hi).max(0.0),
        }
        .max(0.0)
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.infeasibility(x) <= tol
    }

    /// Per-coordinate upper bound on `|x_i|` over the domain.
    pub fn coordinate_bounds(&self) -> Vec<f64> {
        match self {
            Domain::ContKnapsack { prices, budget } | Domain::EqKnapsack { prices, budget } => {
                prices.iter().map(|p| budget / p).collect()
            }
            Domain::BinKnapsack { prices, budget } => {
                prices.iter().map(|p| if p <= budget { 1.0 } else { 0.0 }).collect()
            }
            Domain::Polytope { rows, rhs } => (0..self.dim())
                .map(|i| {
                    rows.iter()
                        .zip(rhs)
                        .filter(|(r, _)| r[i] > 0.0)
                        .map(|(r, c)| c / r[i])
                        .fold(f64::INFINITY, f64::min)
                })
                .collect(),
            Domain::Interval { lo, hi } => vec![lo.abs().max(hi.abs())],
        }
    }

    /// Rows and right-hand sides of the linear inequalities `A x ≤ c`
    /// (knapsack budgets as a single row). `None` for non-polyhedral or
    /// equality domains.
    pub fn inequality_rows(&self) -> Option<(Vec<Vec<f64>>, Vec<f64>)> {
        match self {
            Domain::ContKnapsack { prices, budget } => Some((vec![prices.clone()], vec![*budget])),
            Domain::Polytope { rows, rhs } => Some((rows.clone(), rhs.clone())),
            _ => None,
        }
    }
}

/// One time step's forward problem: the signal `u_t` is the domain data.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub t: usize,
    pub utility: UtilityForm,
    pub domain: Domain,
    pub n: usize,
}

impl Instance {
    pub fn new(t: usize, utility: UtilityForm, domain: Domain) -> Result<Self> {
        let n = domain.dim();
        if let Some(k) = utility.fixed_dim() {
            check_len(k, n, "utility vs domain")?;
        }
        let compatible = match (&utility, &domain) {
            (UtilityForm::Custom1d(_), Domain::Interval { .. }) => true,
            (UtilityForm::Custom1d(_), _) | (_, Domain::Interval { .. }) => false,
            (UtilityForm::QuadDiag { .. }, Domain::EqKnapsack { .. }) => false,
            (UtilityForm::Ces, Domain::EqKnapsack { .. }) => true,
            (UtilityForm::Ces, _) => false,
            (UtilityForm::Bilinear | UtilityForm::CobbDouglas { .. }, Domain::ContKnapsack { .. }) => true,
            (UtilityForm::Bilinear | UtilityForm::CobbDouglas { .. }, _) => false,
            (UtilityForm::QuadDiag { .. }, _) => true,
        };
        if !compatible {
            return Err(Error::Config(format!(
                "no forward solver for {} utility over {} domain",
                utility.tag(),
                domain.tag()
            )));
        }
        Ok(Instance { t, utility, domain, n })
    }
}

/// How an observation was produced from the agent's true action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseMode {
    Perfect,
    UniformSmall,
    UniformLarge,
    SuboptimalFeasible,
}

impl NoiseMode {
    pub fn is_perfect(&self) -> bool {
        matches!(self, NoiseMode::Perfect)
    }
}

/// The learner's view `y_t` of the agent's action.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub y: Vec<f64>,
    pub noise: NoiseMode,
}

impl Observation {
    pub fn perfect(y: Vec<f64>) -> Self {
        Observation { y, noise: NoiseMode::Perfect }
    }
}

pub(crate) fn check_len(got: usize, want: usize, what: &str) -> Result<()> {
    if got != want {
        return Err(Error::Dimension(format!("{what}: {got} != {want}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c_map_sign_conventions() {
        let quad = UtilityForm::quad_diag(vec![1.0, 1.0]).unwrap();
        assert_eq!(c_map(&[1.0, 2.0], &quad).unwrap(), vec![-1.0, -2.0]);
        assert_eq!(c_map(&[1.0, 2.0], &UtilityForm::Ces).unwrap(), vec![1.0, 4.0]);
        let obs = UtilityForm::Custom1d(Custom1d::Obscuring);
        assert_eq!(c_map(&[0.0], &obs).unwrap(), vec![-1.0]);
        assert_eq!(c_map(&[0.5], &obs).unwrap(), vec![0.0]);
    }

    #[test]
    fn cobb_douglas_rejects_nonpositive_goods() {
        let cd = UtilityForm::cobb_douglas();
        assert!(matches!(c_map(&[1.0, 0.0], &cd), Err(Error::Domain(_))));
        assert!(matches!(c_map(&[-1.0, 1.0], &cd), Err(Error::Domain(_))));
        let c = c_map(&[1e-300, 1.0], &cd).unwrap();
        assert_eq!(c[0], -(COBB_DOUGLAS_FLOOR.ln()));
    }

    #[test]
    fn objective_examples() {
        let dom = Domain::cont_knapsack(vec![1.0, 1.0], 10.0).unwrap();
        let quad = Instance::new(1, UtilityForm::quad_diag(vec![1.0, 1.0]).unwrap(), dom.clone()).unwrap();
        let theta = ParameterPoint::simplex(vec![0.5, 0.5]).unwrap();
        assert_eq!(eval_f(&[1.0, 1.0], &theta, &quad).unwrap(), 0.0);

        let ces = Instance::new(1, UtilityForm::Ces, Domain::eq_knapsack(vec![1.0, 1.0], 2.0).unwrap()).unwrap();
        let theta = ParameterPoint::simplex(vec![0.25, 0.75]).unwrap();
        assert_eq!(eval_f(&[2.0, 0.0], &theta, &ces).unwrap(), 1.0);

        let bil = Instance::new(1, UtilityForm::Bilinear, dom).unwrap();
        let e1 = ParameterPoint::simplex(vec![1.0, 0.0]).unwrap();
        assert_eq!(eval_f(&[3.0, 5.0], &e1, &bil).unwrap(), -3.0);
    }

    #[test]
    fn parameter_point_validation() {
        assert!(ParameterPoint::simplex(vec![0.5, 0.5]).is_ok());
        assert!(ParameterPoint::simplex(vec![0.5, 0.6]).is_err());
        assert!(ParameterPoint::simplex(vec![1.1, -0.1]).is_err());
        assert!(ParameterPoint::in_box(vec![3.0], -3.0, 3.0).is_ok());
        assert!(ParameterPoint::in_box(vec![3.5], -3.0, 3.0).is_err());
        assert!(ParameterPoint::simplex(vec![f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn incompatible_pairs_are_rejected() {
        let eck = Domain::eq_knapsack(vec![1.0], 1.0).unwrap();
        assert!(Instance::new(0, UtilityForm::quad_diag(vec![1.0]).unwrap(), eck).is_err());
        let ck = Domain::cont_knapsack(vec![1.0], 1.0).unwrap();
        assert!(Instance::new(0, UtilityForm::Custom1d(Custom1d::Obscuring), ck).is_err());
        let ck2 = Domain::cont_knapsack(vec![1.0, 2.0], 1.0).unwrap();
        assert!(matches!(Instance::new(0, UtilityForm::quad_diag(vec![1.0]).unwrap(), ck2), Err(Error::Dimension(_))));
    }

    #[test]
    fn coordinate_bounds_polytope() {
        let d = Domain::polytope(vec![vec![1.0, 2.0], vec![4.0, 0.0]], vec![4.0, 2.0]).unwrap();
        assert_eq!(d.coordinate_bounds(), vec![0.5, 2.0]);
        assert!(d.contains(&[0.5, 1.75], 1e-12));
        assert!(!d.contains(&[0.6, 0.0], 1e-12));
    }
}
