use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, ValueEnum};

use ioco::domain::NoiseMode;
use ioco::gen::{gen_instance_stream, DomainKind, GenConfig, UtilityKind};
use ioco::harness::{
    aggregate, render_svg, run_experiment, write_summary_csv, write_traces_csv, Algorithm, ExperimentConfig, PlotSpec,
};
use ioco::oco::ScheduleKind;
use ioco::stream_io::write_stream;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum UtilityArg {
    Quad,
    Ces,
    Bilinear,
    Cobb,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DomainArg {
    Ck,
    Cp,
    Bk,
    Eck,
    Interval,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AlgoArg {
    MdEntropy,
    MdEuclid,
    ImplicitSim,
    ImplicitPre,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum NoiseArg {
    None,
    Small,
    Large,
    Subopt,
}

/// Run an online inverse-optimization experiment and write regret traces.
#[derive(Debug, Parser)]
#[command(name = "ioco", version)]
struct Args {
    #[arg(long, value_enum, default_value = "quad")]
    utility: UtilityArg,
    #[arg(long, value_enum, default_value = "ck")]
    domain: DomainArg,
    #[arg(long, value_enum, default_value = "md-entropy")]
    algo: AlgoArg,
    /// paper, optimal, sqrt, or file:<path> with one step size per step.
    #[arg(long)]
    schedule: Option<String>,
    #[arg(long, default_value_t = 50)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    m: usize,
    #[arg(long = "T", default_value_t = 500)]
    horizon: usize,
    #[arg(long, default_value_t = 50)]
    instances: usize,
    #[arg(long, value_enum, default_value = "none")]
    noise: NoiseArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "IOCO_OUT_DIR", default_value = "ioco-out")]
    out: PathBuf,
    /// Also write SVG plots of the summary.
    #[arg(long)]
    plots: bool,
    /// Use a logarithmic y axis in plots.
    #[arg(long)]
    log_scale: bool,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Record step_ms as 0 so repeated runs are byte-identical.
    #[arg(long)]
    no_timing: bool,
    /// Write each generated instance stream to <out>/streams/.
    #[arg(long)]
    write_streams: bool,
}

fn parse_schedule(s: &str) -> Result<ScheduleKind> {
    Ok(match s {
        "paper" => ScheduleKind::Paper,
        "optimal" => ScheduleKind::Optimal,
        "sqrt" => ScheduleKind::Sqrt,
        other => {
            let Some(path) = other.strip_prefix("file:") else {
                bail!("unknown schedule {other:?}; expected paper, optimal, sqrt or file:<path>");
            };
            let text = fs::read_to_string(path).with_context(|| format!("reading schedule {path}"))?;
            let steps = text
                .split_whitespace()
                .map(|w| w.parse::<f64>().with_context(|| format!("bad step size {w:?} in {path}")))
                .collect::<Result<Vec<_>>>()?;
            ScheduleKind::Custom(steps)
        }
    })
}

fn config(args: &Args) -> Result<ExperimentConfig> {
    let domain = match args.domain {
        DomainArg::Ck => DomainKind::ContKnapsack,
        DomainArg::Cp => DomainKind::Polytope,
        DomainArg::Bk => DomainKind::BinKnapsack,
        DomainArg::Eck => DomainKind::EqKnapsack,
        DomainArg::Interval => {
            bail!("interval domains only host the scripted scalar examples, which run in the test suite")
        }
    };
    let utility = match args.utility {
        UtilityArg::Quad => UtilityKind::Quad,
        UtilityArg::Ces => UtilityKind::Ces,
        UtilityArg::Bilinear => UtilityKind::Bilinear,
        UtilityArg::Cobb => UtilityKind::CobbDouglas,
    };
    let noise = match args.noise {
        NoiseArg::None => NoiseMode::Perfect,
        NoiseArg::Small => NoiseMode::UniformSmall,
        NoiseArg::Large => NoiseMode::UniformLarge,
        NoiseArg::Subopt => NoiseMode::SuboptimalFeasible,
    };
    let algorithm = match args.algo {
        AlgoArg::MdEntropy => Algorithm::MdEntropy,
        AlgoArg::MdEuclid => Algorithm::MdEuclid,
        AlgoArg::ImplicitSim => Algorithm::ImplicitSim,
        AlgoArg::ImplicitPre => Algorithm::ImplicitPre,
    };
    let gen = GenConfig {
        n: args.n,
        m: args.m,
        horizon: args.horizon,
        instance_count: args.instances,
        domain,
        utility,
        seed: args.seed,
        noise,
    };
    let mut cfg = ExperimentConfig::new(gen, algorithm);
    cfg.schedule = args.schedule.as_deref().map(parse_schedule).transpose()?;
    cfg.jobs = args.jobs;
    cfg.timing = !args.no_timing;
    cfg.validate()?;
    Ok(cfg)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn run(args: &Args) -> Result<bool> {
    let cfg = config(args)?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;

    if args.write_streams {
        let dir = args.out.join("streams");
        fs::create_dir_all(&dir)?;
        for k in 0..cfg.gen.instance_count {
            let s = gen_instance_stream(&cfg.gen, k)?;
            write_stream(create(&dir.join(format!("instance_{k}.txt")))?, Some(&s.theta_true), &s.instances)?;
        }
    }

    let outcome = run_experiment(&cfg)?;
    if outcome.traces.is_empty() {
        bail!("every instance failed");
    }
    write_traces_csv(create(&args.out.join("traces.csv"))?, &outcome.traces)?;
    let summary = aggregate(&outcome.traces)?;
    write_summary_csv(create(&args.out.join("summary.csv"))?, &summary)?;

    if args.plots {
        let perfect = cfg.gen.noise == NoiseMode::Perfect;
        let regret_metrics: Vec<String> = if perfect {
            ["pre", "sub", "est", "sim"].iter().map(|k| format!("avg_regret_{k}")).collect()
        } else {
            let mut v = vec!["avg_regret_sim".to_string()];
            v.extend(["pre", "sub", "est"].iter().map(|k| format!("avg_regret_{k}_attrue")));
            v
        };
        let plots = [
            ("avg_regret.svg", "Average regret", regret_metrics),
            ("losses.svg", "Loss per step", ["pre", "sub", "est", "sim"].iter().map(|k| format!("loss_{k}")).collect()),
        ];
        for (file, title, metrics) in plots {
            let spec =
                PlotSpec { title: format!("{title} ({})", cfg.algorithm.name()), metrics, log_scale: args.log_scale };
            fs::write(args.out.join(file), render_svg(&summary, &spec)?)?;
        }
    }

    log::info!(
        "{} of {} instances completed; outputs in {}",
        outcome.traces.len(),
        cfg.gen.instance_count,
        args.out.display()
    );
    for (k, e) in &outcome.failures {
        eprintln!("instance {k} failed: {e}");
    }
    for v in &outcome.invariant_violations {
        eprintln!("invariant violated: {v}");
    }
    Ok(outcome.all_ok())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    match run(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
