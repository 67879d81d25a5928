//! Reproducible random instance streams and observation noise.
//!
//! Every random draw comes from a ChaCha stream keyed by
//! `(seed, instance, purpose, t)`, so instances can be generated in any
//! order or in parallel with identical results.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::domain::{Custom1d, Domain, Instance, NoiseMode, Observation, ParamSpace, ParameterPoint, UtilityForm};
use crate::error::{Error, Result};
use crate::vecops::{dot, norm2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DomainKind {
    ContKnapsack,
    Polytope,
    BinKnapsack,
    EqKnapsack,
}

impl DomainKind {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "ck" => DomainKind::ContKnapsack,
            "cp" => DomainKind::Polytope,
            "bk" => DomainKind::BinKnapsack,
            "eck" => DomainKind::EqKnapsack,
            other => return Err(Error::Config(format!("unknown domain kind {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UtilityKind {
    Quad,
    Ces,
    Bilinear,
    CobbDouglas,
}

impl UtilityKind {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "quad" => UtilityKind::Quad,
            "ces" => UtilityKind::Ces,
            "bilinear" => UtilityKind::Bilinear,
            "cobb" => UtilityKind::CobbDouglas,
            other => return Err(Error::Config(format!("unknown utility kind {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub n: usize,
    pub m: usize,
    pub horizon: usize,
    pub instance_count: usize,
    pub domain: DomainKind,
    pub utility: UtilityKind,
    pub seed: u64,
    pub noise: NoiseMode,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            n: 50,
            m: 10,
            horizon: 500,
            instance_count: 50,
            domain: DomainKind::ContKnapsack,
            utility: UtilityKind::Quad,
            seed: 0,
            noise: NoiseMode::Perfect,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.horizon == 0 || self.instance_count == 0 {
            return Err(Error::Config("n, T and the instance count must be positive".into()));
        }
        if self.domain == DomainKind::Polytope && self.m == 0 {
            return Err(Error::Config("polytope domains need m ≥ 1".into()));
        }
        let ok = matches!(
            (self.utility, self.domain),
            (UtilityKind::Quad, DomainKind::ContKnapsack | DomainKind::Polytope | DomainKind::BinKnapsack)
                | (UtilityKind::Ces, DomainKind::EqKnapsack)
                | (UtilityKind::Bilinear | UtilityKind::CobbDouglas, DomainKind::ContKnapsack)
        );
        if !ok {
            return Err(Error::Config(format!("unsupported utility/domain pair {:?}/{:?}", self.utility, self.domain)));
        }
        if self.utility == UtilityKind::CobbDouglas
            && matches!(self.noise, NoiseMode::UniformSmall | NoiseMode::UniformLarge)
        {
            return Err(Error::Config(
                "additive noise can make goods nonpositive, where the Cobb-Douglas map is undefined".into(),
            ));
        }
        Ok(())
    }
}

/// Independent draw purposes within one instance.
#[derive(Debug, Clone, Copy)]
#[repr(u64)]
enum Purpose {
    Theta = 1,
    Quadratic = 2,
    Signal = 3,
    Noise = 4,
}

fn rng_for(seed: u64, instance: usize, purpose: Purpose, t: usize) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(((instance as u64) << 40) | ((purpose as u64) << 32) | t as u64);
    rng
}

fn unit_l1(v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

/// θ_true, the quadratic diagonal (if any) and the per-step instances.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedStream {
    pub theta_true: ParameterPoint,
    pub p_diag: Option<Vec<f64>>,
    pub instances: Vec<Instance>,
}

/// Prices around θ_true: `θ_true + 100 + r` with integer `r ∈ [−10, 10]`.
fn price_vector(rng: &mut ChaCha12Rng, theta: &[f64]) -> Vec<f64> {
    theta.iter().map(|t| t + 100.0 + rng.gen_range(-10i32..=10) as f64).collect()
}

pub fn gen_instance_stream(cfg: &GenConfig, instance: usize) -> Result<GeneratedStream> {
    cfg.validate()?;
    let n = cfg.n;
    let mut rng = rng_for(cfg.seed, instance, Purpose::Theta, 0);
    let theta = unit_l1((0..n).map(|_| rng.gen_range(1.0..=1000.0)).collect());
    let theta_true = ParameterPoint::simplex(theta.clone())?;

    let p_diag = (cfg.utility == UtilityKind::Quad).then(|| {
        let mut rng = rng_for(cfg.seed, instance, Purpose::Quadratic, 0);
        unit_l1((0..n).map(|_| rng.gen_range(1.0..=21.0)).collect())
    });
    let utility = match cfg.utility {
        UtilityKind::Quad => UtilityForm::quad_diag(p_diag.clone().expect("drawn above"))?,
        UtilityKind::Ces => UtilityForm::Ces,
        UtilityKind::Bilinear => UtilityForm::Bilinear,
        UtilityKind::CobbDouglas => UtilityForm::cobb_douglas(),
    };

    let mut instances = Vec::with_capacity(cfg.horizon);
    for t in 1..=cfg.horizon {
        let mut rng = rng_for(cfg.seed, instance, Purpose::Signal, t);
        let domain = match cfg.domain {
            DomainKind::ContKnapsack | DomainKind::EqKnapsack | DomainKind::BinKnapsack => {
                let mut prices = price_vector(&mut rng, &theta);
                if cfg.domain == DomainKind::BinKnapsack {
                    prices.iter_mut().for_each(|p| *p = p.round());
                }
                let total: f64 = prices.iter().sum();
                let budget = rng.gen_range(1.0..=total);
                match cfg.domain {
                    DomainKind::ContKnapsack => Domain::cont_knapsack(prices, budget)?,
                    DomainKind::EqKnapsack => Domain::eq_knapsack(prices, budget)?,
                    _ => Domain::bin_knapsack(prices, budget)?,
                }
            }
            DomainKind::Polytope => {
                let rows: Vec<Vec<f64>> = (0..cfg.m).map(|_| price_vector(&mut rng, &theta)).collect();
                let rhs = rows.iter().map(|r| rng.gen_range(1.0..=r.iter().sum::<f64>())).collect();
                Domain::polytope(rows, rhs)?
            }
        };
        instances.push(Instance::new(t, utility.clone(), domain)?);
    }
    Ok(GeneratedStream { theta_true, p_diag, instances })
}

/// Uniform point on the standard simplex of dimension `k`.
fn dirichlet_flat(rng: &mut ChaCha12Rng, k: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..k).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    unit_l1(e)
}

/// A random feasible action of a continuous domain.
fn random_feasible(rng: &mut ChaCha12Rng, domain: &Domain) -> Vec<f64> {
    match domain {
        Domain::ContKnapsack { prices, budget } => {
            let f = dirichlet_flat(rng, prices.len() + 1);
            prices.iter().zip(&f).map(|(p, fi)| fi * budget / p).collect()
        }
        Domain::EqKnapsack { prices, budget } => {
            let f = dirichlet_flat(rng, prices.len());
            prices.iter().zip(&f).map(|(p, fi)| fi * budget / p).collect()
        }
        Domain::Polytope { rows, rhs } => {
            let u: Vec<f64> = (0..domain.dim()).map(|_| rng.gen::<f64>()).collect();
            let reach =
                rows.iter().zip(rhs).map(|(a, c)| c / dot(a, &u).max(f64::MIN_POSITIVE)).fold(f64::INFINITY, f64::min);
            let scale = reach * rng.gen::<f64>();
            u.iter().map(|v| v * scale).collect()
        }
        Domain::Interval { lo, hi } => vec![rng.gen_range(*lo..=*hi)],
        Domain::BinKnapsack { .. } => vec![0.0; domain.dim()],
    }
}

/// `δ = mean_t ‖x(θ_true; u_t)‖₂`.
pub fn noise_scale(true_actions: &[Vec<f64>]) -> f64 {
    if true_actions.is_empty() {
        return 0.0;
    }
    true_actions.iter().map(|x| norm2(x)).sum::<f64>() / true_actions.len() as f64
}

/// Turns true actions into observations under `mode`.
pub fn apply_noise(
    true_actions: &[Vec<f64>],
    instances: &[Instance],
    mode: NoiseMode,
    seed: u64,
    instance: usize,
) -> Result<Vec<Observation>> {
    if true_actions.len() != instances.len() {
        return Err(Error::Dimension("true actions and instances differ in length".into()));
    }
    let delta = noise_scale(true_actions);
    true_actions
        .iter()
        .zip(instances)
        .map(|(x, inst)| {
            let mut rng = rng_for(seed, instance, Purpose::Noise, inst.t);
            let n = x.len() as f64;
            let y = match mode {
                NoiseMode::Perfect => x.clone(),
                NoiseMode::UniformSmall | NoiseMode::UniformLarge => {
                    let r = if mode == NoiseMode::UniformSmall { delta / n } else { delta };
                    x.iter().map(|v| if r > 0.0 { v + rng.gen_range(-r..=r) } else { *v }).collect()
                }
                NoiseMode::SuboptimalFeasible => {
                    let beta = rng.gen_range(0.0..=0.2);
                    if let Domain::BinKnapsack { .. } = inst.domain {
                        x.iter().map(|&v| if v > 0.5 && rng.gen::<f64>() < beta { 0.0 } else { v }).collect()
                    } else {
                        let z = random_feasible(&mut rng, &inst.domain);
                        x.iter().zip(&z).map(|(a, b)| (1.0 - beta) * a + beta * b).collect()
                    }
                }
            };
            Ok(Observation { y, noise: mode })
        })
        .collect()
}

/// The scalar agent whose action hides everything but "is it zero".
#[derive(Debug, Clone)]
pub struct ScriptedScenario {
    pub theta_true: ParameterPoint,
    pub theta_1: ParameterPoint,
    pub instances: Vec<Instance>,
    /// `η_t = 1/t`.
    pub steps: Vec<f64>,
}

impl ScriptedScenario {
    pub fn space(&self) -> ParamSpace {
        self.theta_true.space()
    }
}

/// θ_true = 0, Θ = [−3, 3], actions in [−1, 1], θ_1 = 3, η_t = 1/t.
pub fn obscuring_scenario(horizon: usize) -> Result<ScriptedScenario> {
    let domain = Domain::interval(-1.0, 1.0)?;
    let utility = UtilityForm::Custom1d(Custom1d::Obscuring);
    Ok(ScriptedScenario {
        theta_true: ParameterPoint::in_box(vec![0.0], -3.0, 3.0)?,
        theta_1: ParameterPoint::in_box(vec![3.0], -3.0, 3.0)?,
        instances: (1..=horizon).map(|t| Instance::new(t, utility.clone(), domain.clone())).collect::<Result<_>>()?,
        steps: (1..=horizon).map(|t| 1.0 / t as f64).collect(),
    })
}

/// `f = θx` on `[−1, 1]` with Θ = [−1, 1] and θ_true = 1.
pub fn linear_witness() -> Result<(Instance, ParameterPoint)> {
    Ok((
        Instance::new(1, UtilityForm::Custom1d(Custom1d::Linear), Domain::interval(-1.0, 1.0)?)?,
        ParameterPoint::in_box(vec![1.0], -1.0, 1.0)?,
    ))
}
