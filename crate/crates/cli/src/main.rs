//! `balm`: runs the Bregman proximal point and augmented Lagrangian solvers
//! on generated instances and writes traces, bound reports, rate fits and
//! plots.
//!
//! Exit status: 0 clean, 1 usage or configuration error, 2 a certified
//! bound was violated (or `predict` disagrees with the trace), 3 the inner
//! solver failed.

mod config;
mod experiment;
mod svg;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use config::{split_schedules, ExperimentConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "balm", version, about = "Bregman proximal point and augmented Lagrangian experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one solver on one instance.
    Run(RunArgs),
    /// Closed-form behaviour of the second Güler scheme on the counterexample.
    Predict(PredictArgs),
    /// Run several solvers on several problems and schedules side by side.
    Compare(CompareArgs),
}

/// Settings shared by `run` and `compare`. Flags override `--config`, which
/// overrides the defaults; `BALM_OUTPUT_DIR` overrides everything.
#[derive(Args)]
struct Common {
    /// File of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra `key=value` setting; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Rows of the instance (pieces, constraints, or actions per state for mdp).
    #[arg(long)]
    m: Option<String>,
    /// Primal dimension (states for mdp).
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Discount factor of the mdp instance.
    #[arg(long)]
    discount: Option<String>,
    /// euclidean, entropy or auto.
    #[arg(long)]
    geometry: Option<String>,
    /// Triangle scaling constant.
    #[arg(long = "G")]
    g: Option<String>,
    #[arg(long)]
    iters: Option<String>,
    /// default, zeros, ones or file:PATH.
    #[arg(long)]
    lambda0: Option<String>,
    #[arg(long)]
    inner_tol: Option<String>,
    /// Comma-separated iteration counts to report.
    #[arg(long)]
    checkpoints: Option<String>,
    #[arg(long)]
    output_dir: Option<String>,
    /// Constant A of the estimate-sequence form.
    #[arg(long)]
    a0: Option<String>,
    /// Constant L of the degenerate scheme.
    #[arg(long = "L")]
    l: Option<String>,
    /// Stop at the first violated bound.
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    reference_budget: Option<String>,
    /// Sampled points per step for the sampled inequalities.
    #[arg(long)]
    samples: Option<String>,
    /// Skip the SVG output.
    #[arg(long)]
    no_plot: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// pmax, lse, mdp, qp or counterexample.
    #[arg(long)]
    problem: Option<String>,
    /// bpp, balm, acc-bpp, acc-bpp2, acc-bpp3, acc-balm, guler1, guler2, nesterov-da or abpg0.
    #[arg(long)]
    algo: Option<String>,
    /// const:η, poly:η,p or file:PATH.
    #[arg(long)]
    schedule: Option<String>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "pmax,lse")]
    problems: String,
    #[arg(long, default_value = "bpp,acc-bpp2")]
    algos: String,
    #[arg(long, default_value = "const:1,poly:1,1")]
    schedules: String,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long, default_value_t = 6)]
    m: usize,
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    #[arg(long, default_value_t = 200)]
    iters: usize,
    /// trace.csv of a guler2 run to compare against.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Largest accepted relative error.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

fn build_config(common: &Common, extra: &[(&str, &Option<String>)]) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &common.config {
        cfg.load(path)?;
    }
    cfg.apply_pairs(&common.set)?;
    let flags = [
        ("m", &common.m),
        ("n", &common.n),
        ("seed", &common.seed),
        ("discount", &common.discount),
        ("geometry", &common.geometry),
        ("G", &common.g),
        ("iters", &common.iters),
        ("lambda0", &common.lambda0),
        ("inner_tol", &common.inner_tol),
        ("checkpoints", &common.checkpoints),
        ("output_dir", &common.output_dir),
        ("a0", &common.a0),
        ("L", &common.l),
        ("reference_budget", &common.reference_budget),
        ("samples", &common.samples),
    ];
    for (key, value) in flags.iter().chain(extra) {
        if let Some(v) = value {
            cfg.set(key, v).map_err(|e| anyhow::anyhow!("--{key}: {e}"))?;
        }
    }
    if common.strict {
        cfg.strict = true;
    }
    if common.no_plot {
        cfg.plot = false;
    }
    if let Some(dir) = std::env::var_os("BALM_OUTPUT_DIR") {
        cfg.output_dir = PathBuf::from(dir);
    }
    Ok(cfg)
}

fn dispatch(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Run(a) => {
            let cfg = build_config(&a.common, &[("problem", &a.problem), ("algo", &a.algo), ("schedule", &a.schedule)])?;
            experiment::run(&cfg)
        }
        Command::Compare(a) => {
            let mut base = build_config(&a.common, &[])?;
            // comparisons default to a shorter horizon than single runs
            if a.common.iters.is_none() && !a.common.set.iter().any(|s| s.starts_with("iters")) {
                base.iters = 200;
            }
            let problems = a.problems.split(',').map(|s| s.trim().parse()).collect::<Result<Vec<_>>>()?;
            let algos = a
                .algos
                .split(',')
                .map(|s| s.trim().parse().map_err(|e: balm_core::Error| anyhow::anyhow!("{e}")))
                .collect::<Result<Vec<_>>>()?;
            experiment::compare(&base, &problems, &algos, &split_schedules(&a.schedules))
        }
        Command::Predict(a) => experiment::predict(&experiment::PredictRequest {
            m: a.m,
            n: a.n,
            seed: a.seed,
            eta: a.eta,
            iters: a.iters,
            trace: a.trace,
            tol: a.tol,
        }),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
