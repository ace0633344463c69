//! Running configured experiments and writing their artifacts.

use crate::config::{ExperimentConfig, Prepared, ProblemName};
use crate::svg::{self, Curve, Panel};
use anyhow::{anyhow, Context, Result};
use balm_core::metrics::{fit_series, Series};
use balm_core::problems::{compute_reference, make_counterexample_lp, write_instance};
use balm_core::solvers::*;
use balm_core::{Objective, ProxEnvironment, ProxMode, Reference64, Trace64};
use std::fs;
use std::path::{Path, PathBuf};

pub const EXIT_VIOLATION: u8 = 2;
pub const EXIT_INNER: u8 = 3;

pub const TRACE_COLUMNS: [&str; 11] = [
    "k",
    "eta_k",
    "theta_k",
    "primal_obj",
    "dual_val",
    "feas",
    "ergodic_primal_gap",
    "ergodic_feas",
    "bound_lhs",
    "bound_rhs",
    "margin",
];

/// Exit status of a finished run.
pub fn exit_code(trace: &Trace64) -> u8 {
    match trace.status {
        RunStatus::InnerFailure(_) => EXIT_INNER,
        RunStatus::InvariantViolation(_) => EXIT_VIOLATION,
        RunStatus::Completed if !trace.bounds.passed() => EXIT_VIOLATION,
        RunStatus::Completed => 0,
    }
}

pub fn reference_for(config: &ExperimentConfig, prepared: &Prepared) -> Option<Reference64> {
    match compute_reference(&prepared.problem, config.reference_budget) {
        Ok(r) => Some(r),
        Err(e) => {
            eprintln!("warning: {e}; bounds that need a reference are skipped");
            None
        }
    }
}

pub fn execute(config: &ExperimentConfig, prepared: &Prepared, reference: Option<&Reference64>) -> Result<Trace64> {
    let mut opts = RunOptions::<f64> {
        strict: config.strict,
        samples: config.samples,
        seed: config.seed,
        inner_tol: config.inner_tol,
        ..RunOptions::default()
    };
    opts.reference = reference;
    let Prepared { problem, geometry, schedule, lambda0 } = prepared;
    let (t, start) = (config.iters, lambda0.as_slice());
    let mode = if problem.constraint().is_some() { ProxMode::DualProx } else { ProxMode::DirectProx };
    let env = || -> Result<ProxEnvironment<'_, f64>> {
        Ok(ProxEnvironment::new(problem, geometry, mode)?.with_inner_tol(config.inner_tol)?)
    };
    let eta0 = schedule.eta(0)?;
    let trace = match config.algorithm {
        Algorithm::Bpp => run_bpp(&env()?, start, schedule, t, &opts)?,
        Algorithm::Balm => run_balm(problem, geometry, start, schedule, t, &opts)?,
        Algorithm::AccBpp => run_acc_bpp_general(&env()?, start, schedule, t, config.a0, &opts)?,
        Algorithm::AccBpp2 => run_acc_bpp_memoryless(&env()?, start, schedule, t, &opts)?,
        Algorithm::AccBpp3 => run_acc_bpp_dual_avg(&env()?, start, schedule, t, &opts)?,
        Algorithm::AccBalm => run_acc_balm(problem, geometry, start, schedule, t, &opts)?,
        Algorithm::Guler1 => run_classical_scheme(problem, Variant::Guler1, eta0, start, t, &opts)?,
        Algorithm::Guler2 => run_classical_scheme(problem, Variant::Guler2, eta0, start, t, &opts)?,
        Algorithm::NesterovDa => run_classical_scheme(problem, Variant::NesterovDA, eta0, start, t, &opts)?,
        Algorithm::Abpg0 => run_abpg_degenerate(&env()?, start, t, config.l, &opts)?,
    };
    Ok(trace)
}

/// Shortest round-trip form, scientific outside `[1e-4, 1e15)`.
fn num(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e15).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn write_trace(path: &Path, trace: &Trace64) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(TRACE_COLUMNS)?;
    for r in &trace.records {
        w.write_record([
            r.k.to_string(),
            num(r.eta),
            cell(r.theta),
            num(r.primal_objective),
            cell(r.dual_value),
            cell(r.feasibility),
            cell(r.ergodic_primal_gap),
            cell(r.ergodic_feasibility),
            cell(r.bound_lhs),
            cell(r.bound_rhs),
            cell(r.margin()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_bounds(path: &Path, trace: &Trace64) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "bound", "lhs", "rhs", "margin", "slack", "certified", "violated"])?;
    for r in &trace.bounds.rows {
        w.write_record([
            r.t.to_string(),
            r.bound.to_string(),
            num(r.lhs),
            num(r.rhs),
            num(r.margin),
            num(r.slack),
            r.certified.to_string(),
            r.violated().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

const SERIES: [Series; 5] =
    [Series::PrimalGap, Series::DualGap, Series::Feasibility, Series::ErgodicPrimalGap, Series::ErgodicFeasibility];

/// Fit window: the last 90% of the run.
fn window(len: usize) -> (usize, usize) {
    ((len / 10).max(1), len)
}

pub fn write_rates(path: &Path, trace: &Trace64) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["series", "window_lo", "window_hi", "slope", "intercept", "r_squared", "dropped"])?;
    for s in SERIES {
        if let Ok(f) = fit_series(trace, s, window(trace.len())) {
            w.write_record([
                s.name().to_string(),
                f.window.0.to_string(),
                f.window.1.to_string(),
                num(f.slope),
                num(f.intercept),
                num(f.r_squared),
                f.dropped.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn series_points(trace: &Trace64, s: Series) -> Vec<(f64, f64)> {
    trace
        .records
        .iter()
        .filter_map(|r| {
            let v = match s {
                Series::PrimalGap => r.primal_gap,
                Series::DualGap => r.dual_gap,
                Series::Feasibility => r.feasibility,
                Series::ErgodicPrimalGap => r.ergodic_primal_gap,
                Series::ErgodicFeasibility => r.ergodic_feasibility,
            }?;
            Some(((r.k + 1) as f64, v.abs()))
        })
        .collect()
}

pub fn convergence_panel(title: String, trace: &Trace64) -> Panel {
    let curves = SERIES
        .into_iter()
        .map(|s| Curve { label: s.name().replace('_', " "), points: series_points(trace, s) })
        .filter(|c| !c.points.is_empty())
        .collect();
    Panel { title, x_label: "iteration k".into(), y_label: "gap / infeasibility".into(), curves }
}

pub fn write_outputs(dir: &Path, config: &ExperimentConfig, prepared: &Prepared, trace: &Trace64) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    write_trace(&dir.join("trace.csv"), trace)?;
    write_bounds(&dir.join("bounds.csv"), trace)?;
    write_rates(&dir.join("rates.csv"), trace)?;
    fs::write(dir.join("instance.txt"), write_instance(&prepared.problem))?;
    if config.plot {
        let title = format!("{} on {} ({})", config.algorithm, config.problem, config.schedule);
        fs::write(dir.join("convergence.svg"), svg::render(&[convergence_panel(title, trace)], 1))?;
    }
    Ok(())
}

pub fn summarize(config: &ExperimentConfig, trace: &Trace64) {
    let status = match &trace.status {
        RunStatus::Completed => "completed".to_string(),
        RunStatus::InvariantViolation(e) => format!("invariant violation: {e}"),
        RunStatus::InnerFailure(e) => format!("inner failure: {e}"),
    };
    println!(
        "{} on {} ({}): {} of {} iterations, {status}",
        config.algorithm,
        config.problem,
        config.schedule,
        trace.len(),
        config.iters
    );
    let violations = trace.bounds.violations().count();
    println!("bound rows: {}, violated: {violations}", trace.bounds.rows.len());
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3e}"));
    for &t in &config.checkpoints {
        let Some(r) = t.checked_sub(1).and_then(|i| trace.records.get(i)) else {
            println!("T={t}: not reached");
            continue;
        };
        println!(
            "T={t}: primal_gap={} dual_gap={} feas={} ergodic_gap={} ergodic_feas={} margin={}",
            fmt(r.primal_gap),
            fmt(r.dual_gap),
            fmt(r.feasibility),
            fmt(r.ergodic_primal_gap),
            fmt(r.ergodic_feasibility),
            fmt(r.margin())
        );
    }
}

/// Runs one configuration end to end and returns its exit status.
pub fn run(config: &ExperimentConfig) -> Result<u8> {
    let prepared = config.prepare()?;
    let reference = reference_for(config, &prepared);
    let trace = execute(config, &prepared, reference.as_ref())?;
    write_outputs(&config.output_dir, config, &prepared, &trace)?;
    summarize(config, &trace);
    Ok(exit_code(&trace))
}

/// Runs every problem × schedule × algorithm combination concurrently,
/// each into its own subdirectory, and draws one panel per problem and
/// schedule.
pub fn compare(base: &ExperimentConfig, problems: &[ProblemName], algos: &[Algorithm], schedules: &[String]) -> Result<u8> {
    let mut jobs = Vec::new();
    for &p in problems {
        let mut cfg = base.clone();
        cfg.problem = p;
        let prepared = cfg.prepare().with_context(|| format!("problem {p}"))?;
        let reference = reference_for(&cfg, &prepared);
        for s in schedules {
            for &a in algos {
                let mut c = cfg.clone();
                c.schedule = s.clone();
                c.algorithm = a;
                c.output_dir = base.output_dir.join(p.name()).join(c.schedule_tag()).join(a.name());
                let prep = c.prepare().with_context(|| format!("{a} on {p} with {s}"))?;
                jobs.push((c, prep, reference.clone()));
            }
        }
    }
    let results: Vec<Result<Trace64>> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|(c, prep, r)| {
                scope.spawn(move || -> Result<Trace64> {
                    let trace = execute(c, prep, r.as_ref())?;
                    write_outputs(&c.output_dir, c, prep, &trace)?;
                    Ok(trace)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap_or_else(|_| Err(anyhow!("worker panicked")))).collect()
    });

    let mut code = 0;
    let mut panels = Vec::new();
    let mut idx = 0;
    for &p in problems {
        for s in schedules {
            let mut curves = Vec::new();
            for &a in algos {
                let (c, _, _) = &jobs[idx];
                let trace = results[idx].as_ref().map_err(|e| anyhow!("{a} on {p} with {s}: {e}"))?;
                idx += 1;
                code = code.max(exit_code(trace));
                summarize(c, trace);
                let series = if p.is_direct() { Series::PrimalGap } else { Series::ErgodicPrimalGap };
                curves.push(Curve { label: a.name().into(), points: series_points(trace, series) });
            }
            let y = if p.is_direct() { "f(x_k) - f*" } else { "|f(x̃_k) - f*|" };
            panels.push(Panel { title: format!("{p}, {s}"), x_label: "iteration k".into(), y_label: y.into(), curves });
        }
    }
    fs::create_dir_all(&base.output_dir)?;
    let path = base.output_dir.join("compare.svg");
    fs::write(&path, svg::render(&panels, schedules.len()))?;
    println!("wrote {}", path.display());
    Ok(code)
}

/// Closed-form last-iterate gap and infeasibility of the second Güler scheme
/// on the counterexample, optionally checked against a simulated trace.
pub struct PredictRequest {
    pub m: usize,
    pub n: usize,
    pub seed: u64,
    pub eta: f64,
    pub iters: usize,
    pub trace: Option<PathBuf>,
    pub tol: f64,
}

pub fn predict(req: &PredictRequest) -> Result<u8> {
    let problem = make_counterexample_lp::<f64>(req.m, req.n, req.seed)?;
    let con = problem.constraint().ok_or_else(|| anyhow!("counterexample without constraints"))?;
    let Objective::Linear { c } = problem.objective() else {
        return Err(anyhow!("counterexample objective is not linear"));
    };
    let Some(path) = &req.trace else {
        let p = counterexample_predict(&con.a, &con.b, c, req.eta, req.iters)?;
        println!("T={}: predicted_primal_gap={:e} predicted_feasibility={:e}", req.iters, p.primal_gap, p.feasibility);
        return Ok(0);
    };
    let reference = compute_reference(&problem, 100)?;
    let mut rd = csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    let headers = rd.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name).ok_or_else(|| anyhow!("trace has no `{name}` column"));
    let (ci, cf) = (col("primal_obj")?, col("feas")?);
    let mut worst: f64 = 0.0;
    let mut rows = 0;
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let t = i + 1;
        if t > req.iters {
            break;
        }
        let parse = |j: usize| -> Result<f64> {
            rec.get(j).unwrap_or("").parse::<f64>().map_err(|e| anyhow!("row {t}: {e}"))
        };
        let gap = (parse(ci)? - reference.f_star).abs();
        let feas = parse(cf)?;
        let p = counterexample_predict(&con.a, &con.b, c, req.eta, t)?;
        worst = worst.max((gap - p.primal_gap).abs() / p.primal_gap);
        worst = worst.max((feas - p.feasibility).abs() / p.feasibility);
        rows += 1;
    }
    println!("compared {rows} iterations: max relative error {worst:e} (tolerance {:e})", req.tol);
    Ok(if worst <= req.tol && rows > 0 { 0 } else { EXIT_VIOLATION })
}
