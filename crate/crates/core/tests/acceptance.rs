//! Acceptance suite. Prints one line per criterion and exits non-zero when a
//! criterion fails, except for those listed in `KNOWN_UNATTAINABLE`, whose
//! failure is reported but expected (see the README). Sub-checks of such a
//! criterion that are attainable still count as regressions.

mod common;

use balm_core::linalg::{dot, norm2, Matrix};
use balm_core::metrics::{fit_series, slack};
use balm_core::problems::*;
use balm_core::rng::SeededStream;
use balm_core::solvers::*;
use balm_core::*;
use common::*;
use std::process::ExitCode;
use std::time::{Duration, Instant};

const KNOWN_UNATTAINABLE: &[usize] = &[6];

struct Outcome {
    pass: bool,
    detail: String,
    regression: bool,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into(), regression: false }
    }
}

fn main() -> ExitCode {
    let criteria: [(usize, &str, Duration, fn() -> Outcome); 9] = [
        (1, "counterexample closed form", Duration::from_secs(5), counterexample_exactness),
        (2, "guler1 / nesterov-da equivalence", Duration::from_secs(5), classical_equivalence),
        (3, "bpp per-step inequalities", Duration::from_secs(120), bpp_suite),
        (4, "balm ergodic bound", Duration::from_secs(300), balm_suite),
        (5, "accelerated dual certificates", Duration::from_secs(60), accelerated_certificates),
        (6, "primal acceleration separation", Duration::from_secs(300), primal_separation),
        (7, "variant consistency", Duration::from_secs(60), variant_consistency),
        (8, "geometry identities", Duration::from_secs(60), geometry_suite),
        (9, "degenerate accelerated baseline", Duration::from_secs(60), degenerate_baseline),
    ];
    let mut unexpected = Vec::new();
    for (id, name, limit, run) in criteria {
        let t0 = Instant::now();
        let mut out = run();
        let elapsed = t0.elapsed();
        if elapsed > limit {
            out.pass = false;
            out.detail.push_str(&format!("; runtime {:.1}s over {}s", elapsed.as_secs_f64(), limit.as_secs()));
        }
        let verdict = if out.pass { "PASS" } else { "FAIL" };
        println!("[{id}] {name}: {verdict} ({}; {:.2}s)", out.detail, elapsed.as_secs_f64());
        if out.regression || out.pass == KNOWN_UNATTAINABLE.contains(&id) {
            unexpected.push(id);
        }
    }
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected outcome for criteria {unexpected:?}");
        ExitCode::FAILURE
    }
}

fn counterexample_parts(seed: u64) -> (Problem64, Matrix<f64>, Vec<f64>, Vec<f64>) {
    let prob: Problem64 = make_counterexample_lp(6, 3, seed).unwrap();
    let con = prob.constraint().unwrap().clone();
    let Objective::Linear { c } = prob.objective().clone() else { unreachable!() };
    (prob, con.a, con.b, c)
}

fn counterexample_exactness() -> Outcome {
    let mut worst_rel: f64 = 0.0;
    let mut worst_stat: f64 = 0.0;
    for seed in 0..5 {
        let (prob, a, b, c) = counterexample_parts(seed);
        let r = compute_reference(&prob, 100).unwrap();
        let opts = RunOptions::default().with_reference(&r);
        let tr = run_classical_scheme(&prob, Variant::Guler2, 1.0, &[0.0; 6], 200, &opts).unwrap();
        if tr.len() != 200 {
            return Outcome::new(false, format!("seed {seed}: run stopped at {} ({:?})", tr.len(), tr.status));
        }
        for t in 1..=200 {
            let p = counterexample_predict(&a, &b, &c, 1.0, t).unwrap();
            let rec = &tr.records[t - 1];
            worst_rel = worst_rel.max(((rec.primal_gap.unwrap() - p.primal_gap) / p.primal_gap).abs());
            worst_rel = worst_rel.max(((rec.feasibility.unwrap() - p.feasibility) / p.feasibility).abs());
        }
        let mut stat = a.tr_mul_vec(&tr.records[0].lambda);
        stat.iter_mut().zip(&c).for_each(|(s, ci)| *s += ci);
        worst_stat = worst_stat.max(norm2(&stat));
    }
    Outcome::new(
        worst_rel <= 1e-8 && worst_stat <= 1e-9,
        format!("max rel err {worst_rel:.1e} (tol 1e-8), max |A'l1 + c| {worst_stat:.1e} (tol 1e-9)"),
    )
}

fn classical_equivalence() -> Outcome {
    let cex = counterexample_parts(0).0;
    let mut worst: f64 = 0.0;
    for (prob, m) in [(equality_toy(), 1), (cex, 6)] {
        let opts = RunOptions::default();
        let g1 = run_classical_scheme(&prob, Variant::Guler1, 1.0, &vec![0.0; m], 100, &opts).unwrap();
        let da = run_classical_scheme(&prob, Variant::NesterovDA, 1.0, &vec![0.0; m], 100, &opts).unwrap();
        if g1.len() != 100 || da.len() != 100 {
            return Outcome::new(false, "a run stopped early");
        }
        for (r1, r2) in g1.records.iter().zip(&da.records) {
            worst = worst.max(dist(r1.y.as_ref().unwrap(), r2.y.as_ref().unwrap()));
        }
    }
    Outcome::new(worst <= 1e-10, format!("max |y1 - yda| {worst:.1e} (tol 1e-10)"))
}

fn bpp_suite() -> Outcome {
    let mut runs = 0;
    let mut bad = Vec::new();
    let mut worst = f64::INFINITY;
    for kind in ["pmax", "lse"] {
        for seed in 0..3 {
            let prob: Problem64 = if kind == "pmax" {
                make_piecewise_max(15, 20, seed).unwrap()
            } else {
                make_log_sum_exp(15, 20, seed).unwrap()
            };
            let r = compute_reference(&prob, 1000).unwrap();
            let g = simplex_entropy(20);
            let env = ProxEnvironment::new(&prob, &g, ProxMode::DirectProx).unwrap();
            for p in [0.0, 1.0] {
                let s = StepSchedule::polynomial(1.0, p).unwrap();
                let opts = RunOptions::default().with_reference(&r);
                let tr = run_bpp(&env, &g.default_start(), &s, 200, &opts).unwrap();
                runs += 1;
                let complete = [
                    BoundId::ProxInequality,
                    BoundId::DualMonotone,
                    BoundId::DistanceMonotone,
                    BoundId::ProxDualGap,
                ]
                .iter()
                .all(|&b| tr.bounds.of(b).count() == 200 && tr.bounds.of(b).all(|row| row.certified));
                if tr.status != RunStatus::Completed || !complete {
                    bad.push(format!("{kind} seed {seed} p {p}: {:?}", tr.status));
                }
                for b in BoundId::ALL {
                    if let Some(w) = tr.bounds.worst(b) {
                        worst = worst.min(w);
                    }
                }
            }
        }
    }
    Outcome::new(
        bad.is_empty(),
        if bad.is_empty() {
            format!("{runs} runs x 200 steps, zero violations, smallest margin+slack {worst:.1e}")
        } else {
            bad.join("; ")
        },
    )
}

fn balm_suite() -> Outcome {
    let mut details = Vec::new();
    let mut pass = true;
    for (name, prob) in [
        ("qp", make_random_qp::<f64>(150, 30, 0).unwrap()),
        ("mdp", make_mdp_lp::<f64>(30, 5, DEFAULT_DISCOUNT, 0).unwrap()),
    ] {
        let r = compute_reference(&prob, 2000).unwrap();
        let g = BregmanGeometry::entropy(Domain::NonnegativeOrthant(prob.constraint_dim())).unwrap();
        let opts = RunOptions::default().with_reference(&r);
        let s = StepSchedule::constant(1.0).unwrap();
        let tr = run_balm(&prob, &g, &g.default_start(), &s, 300, &opts).unwrap();
        let mut min_margin = f64::INFINITY;
        for t in [50, 100, 200, 300] {
            let Some(rec) = tr.records.get(t - 1) else {
                pass = false;
                details.push(format!("{name}: stopped at {} ({:?})", tr.len(), tr.status));
                break;
            };
            let (lhs, rhs) = (rec.bound_lhs.unwrap(), rec.bound_rhs.unwrap());
            let eps = slack(opts.inner_tol, lhs, rhs);
            pass &= rhs - lhs >= -eps;
            min_margin = min_margin.min(rhs - lhs);
        }
        details.push(format!("{name} min margin {min_margin:.2e}"));
    }
    Outcome::new(pass, details.join(", "))
}

fn toy_duals() -> Vec<(&'static str, Problem64)> {
    vec![
        ("1d", scalar_quadratic(3.0)),
        ("5d", quadratic(&[1.0, 0.8, 0.5, 0.3, 0.1], 1)),
        ("5d-ill", quadratic(&[1.0, 1e-1, 1e-2, 1e-3, 1e-4], 2)),
    ]
}

fn accelerated_certificates() -> Outcome {
    let mut pass = true;
    let mut details = Vec::new();
    let mut worst_eq28 = f64::INFINITY;
    let mut worst_cor1 = f64::INFINITY;
    for (name, prob) in toy_duals() {
        let n = prob.dim();
        let g = full_space(n);
        let r = compute_reference(&prob, 100).unwrap();
        let env = ProxEnvironment::new(&prob, &g, ProxMode::DirectProx).unwrap();
        let opts = RunOptions::default().with_reference(&r);
        let s = StepSchedule::constant(1.0).unwrap();
        let m = run_acc_bpp_memoryless(&env, &vec![0.0; n], &s, 200, &opts).unwrap();
        let rows: Vec<_> = m.bounds.of(BoundId::MemorylessDualGap).collect();
        let ok = rows.len() == 200 && rows.iter().all(|r| r.certified && !r.violated());
        if !ok {
            details.push(format!("{name}: memoryless bound failed ({:?})", m.status));
        }
        pass &= ok;
        worst_eq28 = worst_eq28.min(m.bounds.worst(BoundId::MemorylessDualGap).unwrap_or(f64::NEG_INFINITY));
        let d = run_acc_bpp_dual_avg(&env, &vec![0.0; n], &s, 200, &opts).unwrap();
        let rows: Vec<_> = d.bounds.of(BoundId::DualAveragingGap).collect();
        let ok = rows.len() == 200 && rows.iter().all(|r| r.certified && !r.violated());
        if !ok {
            details.push(format!("{name}: dual-averaging bound failed ({:?})", d.status));
        }
        pass &= ok;
        worst_cor1 = worst_cor1.min(d.bounds.worst(BoundId::DualAveragingGap).unwrap_or(f64::NEG_INFINITY));
    }
    // the same certificate on the piecewise-max instance, where G = 1 is a
    // configuration choice rather than a proven constant: margins only
    let prob: Problem64 = make_piecewise_max(15, 20, 0).unwrap();
    let r = compute_reference(&prob, 1000).unwrap();
    let g = simplex_entropy(20);
    let env = ProxEnvironment::new(&prob, &g, ProxMode::DirectProx).unwrap();
    let opts = RunOptions::default().with_reference(&r);
    let d = run_acc_bpp_dual_avg(&env, &g.default_start(), &StepSchedule::constant(1.0).unwrap(), 200, &opts).unwrap();
    let pmax_worst = d.bounds.worst(BoundId::DualAveragingGap).unwrap_or(f64::NEG_INFINITY);
    pass &= d.len() == 200 && pmax_worst >= 0.0;

    let mut band_rows = 0;
    for p in [0.0, 1.0, 2.0] {
        let prob = scalar_quadratic(3.0);
        let g = full_space(1);
        let env = ProxEnvironment::new(&prob, &g, ProxMode::DirectProx).unwrap();
        let s = StepSchedule::polynomial(1.0, p).unwrap();
        for run in [run_acc_bpp_memoryless::<f64>, run_acc_bpp_dual_avg::<f64>] {
            let tr = run(&env, &[0.0], &s, 500, &RunOptions::default()).unwrap();
            let rows: Vec<_> = tr.bounds.of(BoundId::ThetaBand).collect();
            let ok = tr.len() == 500 && !rows.is_empty() && rows.iter().all(|r| !r.violated());
            if !ok {
                details.push(format!("theta band failed for p = {p} ({:?})", tr.status));
            }
            pass &= ok;
            band_rows += rows.len();
        }
    }
    details.push(format!(
        "memoryless min margin+slack {worst_eq28:.1e}, dual-averaging {worst_cor1:.1e}, pmax {pmax_worst:.1e}, {band_rows} theta-band rows"
    ));
    Outcome::new(pass, details.join("; "))
}

fn primal_separation() -> Outcome {
    let mut pass = true;
    let mut details = Vec::new();
    let qp: Problem64 = make_random_qp(150, 30, 0).unwrap();
    let r = compute_reference(&qp, 2000).unwrap();
    let g = BregmanGeometry::entropy(Domain::NonnegativeOrthant(150)).unwrap();
    let opts = RunOptions::default().with_reference(&r);
    let s = StepSchedule::constant(1.0).unwrap();
    let balm = run_balm(&qp, &g, &g.default_start(), &s, 300, &opts).unwrap();
    let acc = run_acc_balm(&qp, &g, &g.default_start(), &s, 300, &opts).unwrap();
    let slope = |tr: &Trace64, series, w| fit_series(tr, series, w).map(|f| f.slope).unwrap_or(f64::NAN);
    let (sb, sa) = (slope(&balm, Series::ErgodicPrimalGap, (30, 300)), slope(&acc, Series::ErgodicPrimalGap, (30, 300)));
    let qp_ok = (-1.3..=-0.75).contains(&sb) && sa <= -1.6;
    pass &= qp_ok;
    let last_gap = balm.last().and_then(|r| r.ergodic_primal_gap).unwrap_or(f64::NAN);
    details.push(format!(
        "qp: balm slope {sb:.2} (want [-1.3, -0.75]), acc-balm {sa:.2} (want <= -1.6), f* {:.1e}, |l*| {:.1e}, balm gap at 300 {last_gap:.1e}",
        r.f_star,
        norm2(&r.lambda_star)
    ));

    let (cex, ..) = counterexample_parts(0);
    let r = compute_reference(&cex, 100).unwrap();
    let opts = RunOptions::default().with_reference(&r);
    let g2 = run_classical_scheme(&cex, Variant::Guler2, 1.0, &[0.0; 6], 300, &opts).unwrap();
    let geo = full_space(6);
    let acc = run_acc_balm(&cex, &geo, &[0.0; 6], &s, 300, &opts).unwrap();
    let (s2, sa) = (slope(&g2, Series::PrimalGap, (30, 300)), slope(&acc, Series::ErgodicPrimalGap, (30, 300)));
    let cex_ok = (-1.2..=-0.8).contains(&s2) && sa <= -1.7;
    pass &= cex_ok;
    details.push(format!("counterexample: guler2 slope {s2:.2} (want [-1.2, -0.8]), acc-balm {sa:.2} (want <= -1.7)"));
    let mut out = Outcome::new(pass, details.join("; "));
    out.regression = !cex_ok;
    out
}

fn variant_consistency() -> Outcome {
    let mut pass = true;
    let mut worst: f64 = 0.0;
    let s = StepSchedule::constant(1.0).unwrap();
    let quad = quadratic(&[1.0, 0.5, 0.2, 0.05], 3);
    let lse: Problem64 = make_log_sum_exp(15, 20, 0).unwrap();
    let (gq, gs) = (full_space(4), simplex_entropy(20));
    for (prob, g) in [(&quad, &gq), (&lse, &gs)] {
        let env = ProxEnvironment::new(prob, g, ProxMode::DirectProx).unwrap();
        let start = g.default_start();
        let a = run_acc_bpp_memoryless(&env, &start, &s, 50, &RunOptions::default()).unwrap();
        let b = run_acc_bpp_dual_avg(&env, &start, &s, 50, &RunOptions::default()).unwrap();
        pass &= a.len() == 50 && b.len() == 50;
        for (ra, rb) in a.records.iter().zip(&b.records) {
            worst = worst.max(max_diff(&ra.lambda, &rb.lambda));
            worst = worst.max(max_diff(ra.y.as_ref().unwrap(), rb.y.as_ref().unwrap()));
            worst = worst.max(max_diff(ra.v.as_ref().unwrap(), rb.v.as_ref().unwrap()));
        }
    }
    pass &= worst <= 1e-10;

    let r = compute_reference(&quad, 100).unwrap();
    let env = ProxEnvironment::new(&quad, &gq, ProxMode::DirectProx).unwrap();
    let opts = RunOptions::default().with_reference(&r);
    let gen = run_acc_bpp_general(&env, &[0.0; 4], &s, 30, 1e8, &opts).unwrap();
    let mem = run_acc_bpp_memoryless(&env, &[0.0; 4], &s, 30, &opts).unwrap();
    let (dg, dm) = (gen.last().unwrap().dual_gap.unwrap(), mem.last().unwrap().dual_gap.unwrap());
    let rel = (dg - dm).abs() / dm.abs();
    pass &= rel <= 0.01;
    Outcome::new(pass, format!("max iterate diff {worst:.1e} (tol 1e-10), A0=1e8 gap {dg:.3e} vs {dm:.3e}, rel {rel:.1e} (tol 1e-2)"))
}

fn geometry_suite() -> Outcome {
    let mut rng = SeededStream::new(11, 0);
    let n = 5;
    let mut worst_three: f64 = 0.0;
    let mut worst_inverse: f64 = 0.0;
    let geometries = [
        full_space(n),
        BregmanGeometry::euclidean(Domain::NonnegativeOrthant(n)),
        BregmanGeometry::entropy(Domain::NonnegativeOrthant(n)).unwrap(),
        simplex_entropy(n),
    ];
    for g in &geometries {
        let draw = |rng: &mut SeededStream| -> Vec<f64> {
            match g.domain() {
                Domain::FullSpace(_) => (0..n).map(|_| 3.0 * rng.normal::<f64>()).collect(),
                Domain::NonnegativeOrthant(_) => (0..n).map(|_| rng.uniform(1e-3, 5.0)).collect(),
                Domain::Simplex(_) => {
                    let e: Vec<f64> = (0..n).map(|_| rng.uniform(1e-3, 1.0)).collect();
                    let s: f64 = e.iter().sum();
                    e.into_iter().map(|v| v / s).collect()
                }
            }
        };
        for _ in 0..1000 {
            let (a, b, c) = (draw(&mut rng), draw(&mut rng), draw(&mut rng));
            let scale = 1.0 + g.divergence(&a, &b).unwrap() + g.divergence(&b, &c).unwrap() + g.divergence(&a, &c).unwrap();
            worst_three = worst_three.max(g.three_point_residual(&a, &b, &c).unwrap() / scale);
            let back = g.grad_conjugate(&g.grad_h(&a).unwrap()).unwrap();
            worst_inverse = worst_inverse.max(max_diff(&back, &a) / (1.0 + a.iter().fold(0.0f64, |m, v| m.max(v.abs()))));
        }
    }
    let g = full_space(n);
    let mut worst_ratio: f64 = 0.0;
    for _ in 0..1000 {
        let base: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let p1: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let p2: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let theta = rng.uniform(1e-3, 1.0);
        worst_ratio = worst_ratio.max((g.triangle_scaling_ratio(&base, &p1, &p2, theta).unwrap() - 1.0).abs());
    }
    Outcome::new(
        worst_three <= 1e-12 && worst_inverse <= 1e-12 && worst_ratio <= 1e-12,
        format!("three-point {worst_three:.1e}, mirror inverse {worst_inverse:.1e}, |ratio - 1| {worst_ratio:.1e} (tol 1e-12 each)"),
    )
}

/// Independent recursion for `d(λ) = −½a(λ − c)²` with the Euclidean kernel.
fn abpg_oracle(a: f64, c: f64, l: f64, lam0: f64, steps: usize) -> Vec<(f64, f64, f64)> {
    let (mut theta, mut lam, mut mu) = (1.0f64, lam0, lam0);
    let mut out = Vec::new();
    for _ in 0..steps {
        let y = (1.0 - theta) * mu + theta * lam;
        lam = (a * c + theta * l * lam) / (a + theta * l);
        mu = (1.0 - theta) * mu + theta * lam;
        out.push((lam, y, mu));
        let t2 = theta * theta;
        theta = ((t2 * t2 + 4.0 * t2).sqrt() - t2) / 2.0;
    }
    out
}

fn degenerate_baseline() -> Outcome {
    let mut pass = true;
    let (a, c, l) = (1.0, 3.0, 2.0);
    let prob = scalar_quadratic(c);
    let g = full_space(1);
    let r = compute_reference(&prob, 100).unwrap();
    let env = ProxEnvironment::new(&prob, &g, ProxMode::DirectProx).unwrap();
    let opts = RunOptions::default().with_reference(&r);
    let tr = run_abpg_degenerate(&env, &[0.0], 100, l, &opts).unwrap();
    let oracle = abpg_oracle(a, c, l, 0.0, 100);
    let mut worst: f64 = 0.0;
    for (rec, (lam, y, mu)) in tr.records.iter().zip(&oracle) {
        worst = worst.max((rec.lambda[0] - lam).abs());
        worst = worst.max((rec.y.as_ref().unwrap()[0] - y).abs());
        worst = worst.max((rec.v.as_ref().unwrap()[0] - mu).abs());
    }
    pass &= tr.len() == 100 && worst <= 1e-12;
    let rows: Vec<_> = tr.bounds.of(BoundId::DegenerateDualGap).collect();
    pass &= rows.len() == 100 && rows.iter().all(|r| r.certified && !r.violated());

    // BPP with the matched schedule η_k = (k+1)/(2L) against 4L D(λ*, λ₀)/T²
    let prob = quadratic(&[1.0, 0.3, 0.1], 4);
    let r = compute_reference(&prob, 100).unwrap();
    let g = full_space(3);
    let env = ProxEnvironment::new(&prob, &g, ProxMode::DirectProx).unwrap();
    let opts = RunOptions::default().with_reference(&r);
    let s = StepSchedule::polynomial(1.0 / (2.0 * l), 1.0).unwrap();
    let bpp = run_bpp(&env, &[0.0; 3], &s, 100, &opts).unwrap();
    let abpg = run_abpg_degenerate(&env, &[0.0; 3], 100, l, &opts).unwrap();
    let d0 = 0.5 * dot(&r.x_star, &r.x_star);
    let mut envelope_ok = bpp.len() == 100 && abpg.bounds.violations().count() == 0;
    let mut worst_ratio: f64 = 0.0;
    for rec in &bpp.records {
        let t = (rec.k + 1) as f64;
        let gap = rec.dual_gap.unwrap();
        let env_t = 4.0 * l * d0 / (t * t);
        envelope_ok &= gap <= env_t + slack(opts.inner_tol, gap, env_t);
        worst_ratio = worst_ratio.max(gap / env_t);
    }
    pass &= envelope_ok;
    Outcome::new(
        pass,
        format!("oracle diff {worst:.1e} (tol 1e-12), {} bound rows, bpp gap / envelope <= {worst_ratio:.2e}", rows.len()),
    )
}
