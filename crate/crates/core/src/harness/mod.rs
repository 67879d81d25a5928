//! Experiment orchestration: generate a batch of instance streams, run one
//! learner over each, and collect regret traces.

mod aggregate;
mod output;

pub use aggregate::{aggregate, Summary, SummaryColumn};
pub use output::{read_summary_csv, render_svg, trace_columns, write_summary_csv, write_traces_csv, PlotSpec};

use std::time::Instant;

use rayon::prelude::*;

use crate::bilevel::implicit_pre_step;
use crate::domain::{Domain, NoiseMode, ParamSpace, ParameterPoint, UtilityForm};
use crate::error::{Error, Result};
use crate::forward::solve;
use crate::gen::{apply_noise, gen_instance_stream, GenConfig, ScriptedScenario, UtilityKind};
use crate::losses::{
    all_offline_mins, build_regret_trace, build_series_set, check_corollary1, check_proposition1,
    eval_losses_from_prediction, LossRecord, RegretTrace,
};
use crate::oco::{implicit_sim_step, lipschitz_bound, md_step, step_value, ProxSetup, ScheduleKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    MdEntropy,
    MdEuclid,
    ImplicitSim,
    ImplicitPre,
}

impl Algorithm {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "md-entropy" => Algorithm::MdEntropy,
            "md-euclid" => Algorithm::MdEuclid,
            "implicit-sim" => Algorithm::ImplicitSim,
            "implicit-pre" => Algorithm::ImplicitPre,
            other => return Err(Error::Config(format!("unknown algorithm {other:?}"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::MdEntropy => "md-entropy",
            Algorithm::MdEuclid => "md-euclid",
            Algorithm::ImplicitSim => "implicit-sim",
            Algorithm::ImplicitPre => "implicit-pre",
        }
    }

    fn default_schedule(&self) -> ScheduleKind {
        match self {
            Algorithm::MdEntropy | Algorithm::MdEuclid => ScheduleKind::Optimal,
            Algorithm::ImplicitSim | Algorithm::ImplicitPre => ScheduleKind::Sqrt,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub gen: GenConfig,
    pub algorithm: Algorithm,
    /// `None` picks the algorithm's default.
    pub schedule: Option<ScheduleKind>,
    /// Worker threads; 0 uses all cores.
    pub jobs: usize,
    /// When false every `step_ms` is written as 0 so output is
    /// reproducible byte for byte.
    pub timing: bool,
}

impl ExperimentConfig {
    pub fn new(gen: GenConfig, algorithm: Algorithm) -> Self {
        ExperimentConfig { gen, algorithm, schedule: None, jobs: 0, timing: true }
    }

    pub fn validate(&self) -> Result<()> {
        self.gen.validate()?;
        if self.algorithm == Algorithm::ImplicitPre {
            if self.gen.utility != UtilityKind::Quad
                || !matches!(self.gen.domain, crate::gen::DomainKind::ContKnapsack | crate::gen::DomainKind::Polytope)
            {
                return Err(Error::Config(
                    "implicit-pre needs the quadratic utility on a continuous knapsack or polytope".into(),
                ));
            }
            if self.gen.n > crate::bilevel::MAX_DIM {
                return Err(Error::TooLarge(format!(
                    "implicit-pre is limited to n ≤ {}; got n = {}",
                    crate::bilevel::MAX_DIM,
                    self.gen.n
                )));
            }
        }
        Ok(())
    }
}

/// Traces of all completed instances plus what went wrong elsewhere.
#[derive(Debug, Clone, Default)]
pub struct ExperimentOutcome {
    pub traces: Vec<RegretTrace>,
    /// `(instance, error)` for instances that aborted.
    pub failures: Vec<(usize, String)>,
    pub invariant_violations: Vec<String>,
}

impl ExperimentOutcome {
    pub fn all_ok(&self) -> bool {
        self.failures.is_empty() && self.invariant_violations.is_empty()
    }
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

struct InstanceRun {
    trace: RegretTrace,
    violations: Vec<String>,
}

fn run_instance(cfg: &ExperimentConfig, instance: usize) -> Result<InstanceRun> {
    let stream = gen_instance_stream(&cfg.gen, instance)?;
    let theta_true = stream.theta_true;
    let insts = stream.instances;
    let n = cfg.gen.n;
    let mode = cfg.gen.noise;

    // True actions are the agent's business and never timed.
    let mut true_actions = Vec::with_capacity(insts.len());
    for inst in &insts {
        let sol = solve(theta_true.values(), inst)?;
        if !sol.is_optimal() {
            return Err(Error::Solver(format!("true action at t = {} ended with {:?}", inst.t, sol.status)));
        }
        true_actions.push(sol.x);
    }
    let observations = apply_noise(&true_actions, &insts, mode, cfg.gen.seed, instance)?;

    let g = lipschitz_bound(&insts);
    let setup = match cfg.algorithm {
        Algorithm::MdEntropy => ProxSetup::entropy(n, g),
        _ => ProxSetup::euclid_simplex(n, g),
    };
    let schedule = cfg.schedule.clone().unwrap_or_else(|| cfg.algorithm.default_schedule()).build(&setup, insts.len());

    let mut theta = ParameterPoint::uniform(n);
    let mut records = Vec::with_capacity(insts.len());
    let mut attrue: Vec<LossRecord> = Vec::new();
    let mut step_ms = Vec::with_capacity(insts.len());
    for ((inst, obs), x_true) in insts.iter().zip(&observations).zip(&true_actions) {
        let t = inst.t;
        let clock = Instant::now();
        let pred = solve(theta.values(), inst)?;
        let mut spent = elapsed_ms(clock);
        if !pred.is_optimal() {
            log::warn!("instance {instance} step {t}: prediction solve ended with {:?}", pred.status);
        }
        let record = eval_losses_from_prediction(theta.values(), &pred.x, inst, &obs.y, theta_true.values())?;
        if !mode.is_perfect() {
            attrue.push(eval_losses_from_prediction(theta.values(), &pred.x, inst, x_true, theta_true.values())?);
        }

        let clock = Instant::now();
        let next = match cfg.algorithm {
            Algorithm::MdEntropy | Algorithm::MdEuclid => md_step(&theta, &record.s_t, t, &schedule, &setup)?,
            Algorithm::ImplicitSim => implicit_sim_step(&theta, &record.s_t, t, &schedule)?,
            Algorithm::ImplicitPre => {
                // Only the oracle counts; the prediction above is evaluator work.
                spent = 0.0;
                implicit_pre_step(&theta, step_value(&schedule, t)?, inst, &obs.y)?
            }
        };
        spent += elapsed_ms(clock);
        step_ms.push(if cfg.timing { spent } else { 0.0 });
        records.push(record);
        theta = next;
    }

    let space = theta_true.space();
    let mins = all_offline_mins(&records, space, theta_true.values(), mode);
    let mut trace = build_regret_trace(instance, records, mins, step_ms)?;
    if !mode.is_perfect() {
        let mins = all_offline_mins(&attrue, space, theta_true.values(), NoiseMode::Perfect);
        let series = build_series_set(&attrue, mins)?;
        trace.attrue = Some((attrue, series));
    }

    let mut violations = Vec::new();
    if mode.is_perfect() {
        let scale = 1.0 + trace.series[3].cumulative.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if let Err(e) = check_proposition1(&trace, 1e-6 * scale) {
            violations.push(e.to_string());
        }
        let continuous_quad = matches!(insts[0].utility, UtilityForm::QuadDiag { .. })
            && !matches!(insts[0].domain, Domain::BinKnapsack { .. });
        if continuous_quad {
            let gamma = insts[0].utility.strong_convexity().expect("quadratic form");
            if let Err(e) = check_corollary1(&trace, gamma, 1e-6 * scale) {
                violations.push(e.to_string());
            }
        }
    }
    Ok(InstanceRun { trace, violations })
}

/// Runs a scripted scalar scenario with perfect observations and its own
/// step table. Only the Euclidean learners and the prediction-loss oracle
/// make sense on a box parameter space.
pub fn run_scripted(scenario: &ScriptedScenario, algorithm: Algorithm) -> Result<RegretTrace> {
    let theta_true = &scenario.theta_true;
    let ParamSpace::Box { lo, hi } = scenario.space() else {
        return Err(Error::Config("scripted scenarios live on a box".into()));
    };
    let setup = ProxSetup::euclid_box(theta_true.dim(), lo, hi, lipschitz_bound(&scenario.instances));
    let schedule = ScheduleKind::Custom(scenario.steps.clone()).build(&setup, scenario.instances.len());

    let mut theta = scenario.theta_1.clone();
    let mut records = Vec::with_capacity(scenario.instances.len());
    for inst in &scenario.instances {
        let y = solve(theta_true.values(), inst)?.x;
        let pred = solve(theta.values(), inst)?;
        let record = eval_losses_from_prediction(theta.values(), &pred.x, inst, &y, theta_true.values())?;
        theta = match algorithm {
            Algorithm::MdEuclid => md_step(&theta, &record.s_t, inst.t, &schedule, &setup)?,
            Algorithm::ImplicitSim => implicit_sim_step(&theta, &record.s_t, inst.t, &schedule)?,
            Algorithm::ImplicitPre => implicit_pre_step(&theta, step_value(&schedule, inst.t)?, inst, &y)?,
            Algorithm::MdEntropy => {
                return Err(Error::Config("entropy geometry needs a simplex parameter space".into()))
            }
        };
        records.push(record);
    }
    let mins = all_offline_mins(&records, scenario.space(), theta_true.values(), NoiseMode::Perfect);
    let steps = vec![0.0; records.len()];
    build_regret_trace(0, records, mins, steps)
}

/// Runs every instance of the batch, in parallel when `jobs != 1`.
///
/// Output order follows the instance index regardless of scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let results: Vec<(usize, Result<InstanceRun>)> =
        pool.install(|| (0..cfg.gen.instance_count).into_par_iter().map(|k| (k, run_instance(cfg, k))).collect());

    let mut outcome = ExperimentOutcome::default();
    for (k, res) in results {
        match res {
            Ok(run) => {
                for v in run.violations {
                    log::error!("instance {k}: {v}");
                    outcome.invariant_violations.push(format!("instance {k}: {v}"));
                }
                outcome.traces.push(run.trace);
            }
            Err(e) => {
                log::error!("instance {k} aborted: {e}");
                outcome.failures.push((k, e.to_string()));
            }
        }
    }
    Ok(outcome)
}
