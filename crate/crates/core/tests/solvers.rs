mod common;

use balm_core::linalg::Matrix;
use balm_core::metrics::{ergodic_average, Weighting};
use balm_core::problems::*;
use balm_core::solvers::*;
use balm_core::*;
use common::*;
use num_rational::Rational64;
use num_traits::ToPrimitive;

fn opts() -> RunOptions<'static, f64> {
    RunOptions::default()
}

#[test]
fn balm_equality_toy_follows_the_exact_recursion() {
    let p = equality_toy();
    let g = full_space(1);
    let tr = run_balm(&p, &g, &[0.0], &StepSchedule::constant(1.0).unwrap(), 5, &opts()).unwrap();
    // x⁺ = (η − λ)/(1 + η), λ⁺ = λ + η(x⁺ − 1)
    let eta = Rational64::from_integer(1);
    let one = Rational64::from_integer(1);
    let mut lam = Rational64::from_integer(0);
    for r in &tr.records {
        let x = (eta - lam) / (one + eta);
        lam += eta * (x - one);
        assert!((r.x.as_ref().unwrap()[0] - x.to_f64().unwrap()).abs() < 1e-12);
        assert!((r.lambda[0] - lam.to_f64().unwrap()).abs() < 1e-12);
    }
    let long = run_balm(&p, &g, &[0.0], &StepSchedule::constant(1.0).unwrap(), 60, &opts()).unwrap();
    let last = long.last().unwrap();
    assert!((last.x.as_ref().unwrap()[0] - 1.0).abs() < 1e-9);
    assert!((last.lambda[0] + 1.0).abs() < 1e-9);
}

#[test]
fn balm_inequality_multiplier_stays_nonnegative() {
    // min x  s.t.  −x ≤ 0
    let p = ConstrainedProblem::new(
        Objective::Linear { c: vec![1.0] },
        FeasibleSet::FreeSpace,
        Some(LinearConstraint { a: Matrix::identity(1).scaled(-1.0), b: vec![0.0], sense: Sense::Inequality }),
    )
    .unwrap();
    let g = BregmanGeometry::euclidean(Domain::NonnegativeOrthant(1));
    let tr = run_balm(&p, &g, &[0.0], &StepSchedule::constant(1.0).unwrap(), 40, &opts()).unwrap();
    assert!(tr.records.iter().all(|r| r.lambda[0] >= 0.0));
    let last = tr.last().unwrap();
    assert!((last.lambda[0] - 1.0).abs() < 1e-8);
    assert!(last.x.as_ref().unwrap()[0].abs() < 1e-8);
}

#[test]
fn bpp_on_a_constant_stays_put() {
    let p = ConstrainedProblem::new(Objective::Linear { c: vec![0.0; 3] }, FeasibleSet::Simplex, None).unwrap();
    let g = simplex_entropy(3);
    let env = ProxEnvironment::new(&p, &g, ProxMode::DirectProx).unwrap();
    let start = [0.2, 0.3, 0.5];
    let tr = run_bpp(&env, &start, &StepSchedule::constant(1.0).unwrap(), 10, &opts()).unwrap();
    for r in &tr.records {
        assert!(max_diff(&r.lambda, &start) < 1e-12);
    }
}

#[test]
fn euclidean_bpp_halves_the_distance() {
    let p = scalar_quadratic(3.0);
    let g = full_space(1);
    let env = ProxEnvironment::new(&p, &g, ProxMode::DirectProx).unwrap();
    let tr = run_bpp(&env, &[-1.0], &StepSchedule::constant(1.0).unwrap(), 20, &opts()).unwrap();
    let mut x = -1.0;
    for r in &tr.records {
        x = (x + 3.0) / 2.0;
        assert!((r.lambda[0] - x).abs() < 1e-12);
    }
}

#[test]
fn bpp_dual_gap_bound_on_log_sum_exp() {
    let p: Problem64 = make_log_sum_exp(15, 20, 0).unwrap();
    let reference = compute_reference(&p, 2000).unwrap();
    let g = simplex_entropy(20);
    let env = ProxEnvironment::new(&p, &g, ProxMode::DirectProx).unwrap();
    let o = opts().with_reference(&reference);
    let tr = run_bpp(&env, &g.default_start(), &StepSchedule::constant(1.0).unwrap(), 200, &o).unwrap();
    assert_eq!(tr.status, RunStatus::Completed);
    assert_eq!(tr.bounds.of(BoundId::ProxDualGap).count(), 200);
    assert!(tr.bounds.worst(BoundId::ProxDualGap).unwrap() >= 0.0);
}

#[test]
fn estimate_sequence_form_first_steps() {
    let p = scalar_quadratic(3.0);
    let g = full_space(1);
    let env = ProxEnvironment::new(&p, &g, ProxMode::DirectProx).unwrap();
    let reference = compute_reference(&p, 100).unwrap();
    let o = opts().with_reference(&reference);
    let tr = run_acc_bpp_general(&env, &[0.0], &StepSchedule::constant(1.0).unwrap(), 30, 1.0, &o).unwrap();
    let theta0 = tr.records[0].theta.unwrap();
    assert!((theta0 - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-12);
    // A₁ = (1 − θ₀)A₀, then θ₁ solves θ² = A₁(1 − θ)
    let a1 = 1.0 - theta0;
    assert!((a1 - 0.3819660113).abs() < 1e-10);
    let theta1 = (-a1 + (a1 * a1 + 4.0 * a1).sqrt()) / 2.0;
    assert!((tr.records[1].theta.unwrap() - theta1).abs() < 1e-12);
    assert_eq!(tr.status, RunStatus::Completed);
    assert!(tr.bounds.worst(BoundId::EstimateDualGap).unwrap() >= 0.0);
    assert!(tr.bounds.worst(BoundId::ProductBand).unwrap() >= 0.0);
}

#[test]
fn memoryless_theta_sequence_and_band() {
    let p = scalar_quadratic(3.0);
    let g = full_space(1);
    let env = ProxEnvironment::new(&p, &g, ProxMode::DirectProx).unwrap();
    let tr = run_acc_bpp_memoryless(&env, &[0.5], &StepSchedule::constant(1.0).unwrap(), 3, &opts()).unwrap();
    // θ = 1/t with t⁺ = (1 + √(1 + 4t²))/2
    let mut t = 1.0f64;
    for r in &tr.records {
        assert!((r.theta.unwrap() - 1.0 / t).abs() < 1e-12);
        t = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
    }
    assert!((tr.records[1].theta.unwrap() - 0.6180339887).abs() < 1e-10);
    assert!((tr.records[2].theta.unwrap() - 0.4559).abs() < 1e-4);
    assert_eq!(tr.records[0].y.as_deref(), Some(&[0.5][..]));

    let sched = StepSchedule::polynomial(1.0, 1.0).unwrap();
    let tr = run_acc_bpp_memoryless(&env, &[0.5], &sched, 101, &opts()).unwrap();
    let mut root_sum = 0.0;
    for (k, r) in tr.records.iter().enumerate() {
        let root = ((k + 1) as f64).sqrt();
        root_sum += root;
        let th = r.theta.unwrap();
        assert!(root / root_sum <= th + 1e-12 && th <= 2.0 * root / root_sum + 1e-12, "k = {k}");
    }
}

#[test]
fn dual_averaging_weight_sum_identity() {
    let p: Problem64 = make_log_sum_exp(6, 5, 1).unwrap();
    let g = simplex_entropy(5);
    let env = ProxEnvironment::new(&p, &g, ProxMode::DirectProx).unwrap();
    let sched = StepSchedule::polynomial(1.0, 1.0).unwrap();
    let tr = run_acc_bpp_dual_avg(&env, &g.default_start(), &sched, 40, &opts()).unwrap();
    let mut s = 0.0;
    for r in &tr.records {
        let th = r.theta.unwrap();
        s += r.eta / th;
        let closed = r.eta / (th * th);
        assert!((s - closed).abs() <= 1e-10 * closed);
    }
}

#[test]
fn accelerated_balm_single_step_average_is_the_iterate() {
    let p = equality_toy();
    let g = full_space(1);
    let tr = run_acc_balm(&p, &g, &[0.0], &StepSchedule::constant(1.0).unwrap(), 1, &opts()).unwrap();
    let (x, l) = ergodic_average(&tr, Weighting::EtaOverThetaWeights, 1).unwrap();
    assert_eq!(x, *tr.records[0].x.as_ref().unwrap());
    assert_eq!(l, tr.records[0].lambda);
}

#[test]
fn accelerated_balm_beats_balm_on_the_equality_toy() {
    let p = equality_toy();
    let g = full_space(1);
    let reference = compute_reference(&p, 100).unwrap();
    let o = opts().with_reference(&reference);
    let sched = StepSchedule::constant(1.0).unwrap();
    let plain = run_balm(&p, &g, &[0.0], &sched, 50, &o).unwrap();
    let acc = run_acc_balm(&p, &g, &[0.0], &sched, 50, &o).unwrap();
    let gap = |tr: &Trace64| tr.last().unwrap().ergodic_primal_gap.unwrap().abs();
    assert!(gap(&acc) < gap(&plain), "{} vs {}", gap(&acc), gap(&plain));
}

#[test]
fn accelerated_balm_bound_on_the_qp() {
    let p: Problem64 = make_random_qp(150, 30, 0).unwrap();
    let reference = compute_reference(&p, 2000).unwrap();
    let g = BregmanGeometry::entropy(Domain::NonnegativeOrthant(150)).unwrap();
    let o = opts().with_reference(&reference);
    let tr = run_acc_balm(&p, &g, &g.default_start(), &StepSchedule::constant(1.0).unwrap(), 200, &o).unwrap();
    assert_eq!(tr.status, RunStatus::Completed);
    for t in [50, 100, 200] {
        let row = tr.bounds.of(BoundId::AcceleratedInequality).find(|r| r.t == t).unwrap();
        assert!(row.margin >= -row.slack, "T = {t}: {row:?}");
    }
}

#[test]
fn classical_t_sequence() {
    let p: Problem64 = make_counterexample_lp(4, 2, 0).unwrap();
    let tr = run_classical_scheme(&p, Variant::Guler1, 1.0, &[0.0; 4], 3, &opts()).unwrap();
    let t1 = (1.0 + 5f64.sqrt()) / 2.0;
    assert!((tr.records[0].theta.unwrap() - 1.0).abs() < 1e-15);
    assert!((1.0 / tr.records[1].theta.unwrap() - t1).abs() < 1e-12);
    assert!((1.0 / tr.records[2].theta.unwrap() - 2.1935).abs() < 1e-4);
}

#[test]
fn counterexample_prediction_small_instance() {
    let a = Matrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
    let (b, c) = ([1.0f64, 1.0], [1.0f64]);
    let p1 = counterexample_predict(&a, &b, &c, 1.0, 1).unwrap();
    assert!((p1.primal_gap - 0.5).abs() < 1e-15);
    assert!((p1.feasibility - 0.5f64.sqrt()).abs() < 1e-15);
    assert!(max_diff(&p1.lambda1, &[-0.5, -0.5]) < 1e-15);
    let p2 = counterexample_predict(&a, &b, &c, 1.0, 2).unwrap();
    assert!((p2.primal_gap - 0.5 / ((1.0 + 5f64.sqrt()) / 2.0)).abs() < 1e-15);
    assert!((p2.primal_gap - 0.3090).abs() < 1e-4);
    let rank_deficient = Matrix::from_rows(&[vec![1.0, 1.0], vec![2.0, 2.0]]).unwrap();
    assert!(counterexample_predict(&rank_deficient, &b, &[1.0, 1.0], 1.0, 1).is_err());
}

#[test]
fn degenerate_scheme_first_theta() {
    let p = scalar_quadratic(3.0);
    let g = full_space(1);
    let env = ProxEnvironment::new(&p, &g, ProxMode::DirectProx).unwrap();
    let tr = run_abpg_degenerate(&env, &[0.0], 5, 2.0, &opts()).unwrap();
    assert_eq!(tr.records[0].theta, Some(1.0));
    assert!((tr.records[1].theta.unwrap() - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-12);
    for (k, r) in tr.records.iter().enumerate() {
        assert!(r.eta >= (k + 1) as f64 / 4.0 - 1e-12);
    }
}

#[test]
fn strict_mode_stops_at_the_first_violation() {
    let p = scalar_quadratic(3.0);
    let g = full_space(1);
    let env = ProxEnvironment::new(&p, &g, ProxMode::DirectProx).unwrap();
    let mut wrong = compute_reference(&p, 100).unwrap();
    wrong.f_star = -10.0;
    let mut o = opts().with_reference(&wrong);
    o.strict = true;
    let tr = run_bpp(&env, &[0.0], &StepSchedule::constant(1.0).unwrap(), 20, &o).unwrap();
    assert!(matches!(tr.status, RunStatus::InvariantViolation(_)));
    assert!(tr.len() < 20);
    o.strict = false;
    let tr = run_bpp(&env, &[0.0], &StepSchedule::constant(1.0).unwrap(), 20, &o).unwrap();
    assert_eq!(tr.len(), 20);
    assert!(!tr.bounds.passed());
}

#[test]
fn single_precision_run() {
    let p: Problem32 = make_log_sum_exp(5, 4, 2).unwrap();
    let g: Geometry32 = BregmanGeometry::entropy(Domain::Simplex(4)).unwrap();
    let env = ProxEnvironment::new(&p, &g, ProxMode::DirectProx).unwrap().with_inner_tol(1e-5).unwrap();
    let mut o: RunOptions<'_, f32> = RunOptions::default();
    o.inner_tol = 1e-5;
    let tr = run_acc_bpp_memoryless(&env, &g.default_start(), &StepSchedule::constant(1.0f32).unwrap(), 20, &o).unwrap();
    assert_eq!(tr.status, RunStatus::Completed);
    let last = tr.last().unwrap();
    assert!((last.lambda.iter().sum::<f32>() - 1.0).abs() < 1e-5);
}

#[test]
fn schedules_reject_nonpositive_steps() {
    assert!(StepSchedule::constant(0.0).is_err());
    assert!(StepSchedule::explicit(vec![1.0, -1.0]).is_err());
    assert!(StepSchedule::polynomial(1.0, f64::NAN).is_err());
}
