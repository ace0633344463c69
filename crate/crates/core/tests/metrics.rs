use balm_core::metrics::*;
use balm_core::rng::SeededStream;
use balm_core::solvers::Algorithm;
use balm_core::*;
use proptest::prelude::*;

fn record(k: usize, eta: f64, theta: Option<f64>, x: f64, lambda: f64) -> IterRecord<f64> {
    IterRecord {
        k,
        eta,
        theta,
        lambda: vec![lambda],
        y: None,
        v: None,
        x: Some(vec![x]),
        dual_value: None,
        primal_objective: 0.0,
        feasibility: None,
        primal_gap: None,
        dual_gap: None,
        ergodic_primal_gap: None,
        ergodic_feasibility: None,
        bound: None,
        bound_lhs: None,
        bound_rhs: None,
        inner_iterations: 0,
        inner_residual: 0.0,
    }
}

fn trace(records: Vec<IterRecord<f64>>) -> Trace64 {
    RunTrace {
        algorithm: Algorithm::Balm,
        lambda0: vec![0.0],
        dual_start: None,
        records,
        bounds: BoundReport::default(),
        status: RunStatus::Completed,
    }
}

#[test]
fn eta_weighted_average_by_hand() {
    let tr = trace((0..3).map(|k| record(k, (k + 1) as f64, None, (k + 1) as f64, 0.0)).collect());
    let (x, _) = ergodic_average(&tr, Weighting::EtaWeights, 3).unwrap();
    assert!((x[0] - 14.0 / 6.0).abs() < 1e-15);
}

#[test]
fn single_row_average_is_the_row() {
    let tr = trace(vec![record(0, 2.5, Some(1.0), 4.0, -1.5)]);
    for w in [Weighting::EtaWeights, Weighting::EtaOverThetaWeights] {
        let (x, l) = ergodic_average(&tr, w, 1).unwrap();
        assert_eq!((x[0], l[0]), (4.0, -1.5));
    }
    assert!(ergodic_average(&tr, Weighting::EtaWeights, 2).is_err());
    assert!(ergodic_average(&tr, Weighting::EtaWeights, 0).is_err());
}

#[test]
fn theta_weighting_needs_theta() {
    let tr = trace(vec![record(0, 1.0, None, 1.0, 1.0)]);
    assert!(ergodic_average(&tr, Weighting::EtaOverThetaWeights, 1).is_err());
}

#[test]
fn dual_gap_rhs_is_a_division() {
    // D(λ*, λ₀) = ½‖(2)‖² = 2, ten unit steps
    let g = BregmanGeometry::euclidean(Domain::FullSpace(1));
    let reference = ReferenceSolution {
        x_star: vec![2.0],
        lambda_star: vec![],
        f_star: 0.0,
        rho_star: 1.0,
        certificate: vec![],
        kkt_residual: 0.0,
    };
    let schedule = StepSchedule::constant(1.0).unwrap();
    let inp = BoundInputs {
        geometry: &g,
        reference: Some(&reference),
        schedule: &schedule,
        thetas: &[],
        lambda0: &[0.0],
        a0: None,
        l: None,
        dual_start: None,
        t: 10,
    };
    assert!((bound_rhs(BoundId::ProxDualGap, &inp).unwrap() - 0.2f64).abs() < 1e-15);
    assert!(bound_rhs(BoundId::MemorylessDualGap, &BoundInputs { reference: None, ..inp.clone() }).is_err());
    assert!(bound_rhs(BoundId::ProxDualGap, &BoundInputs { t: 0, ..inp }).is_err());
}

#[test]
fn euclidean_ball_maximum_is_the_far_point() {
    let g = BregmanGeometry::euclidean(Domain::FullSpace(3));
    assert_eq!(max_divergence_over_ball(&g, &[0.0; 3], 3.0, false).unwrap(), 4.5);
    let g = BregmanGeometry::euclidean(Domain::NonnegativeOrthant(3));
    assert_eq!(max_divergence_over_ball(&g, &[0.0; 3], 3.0, true).unwrap(), 4.5);
}

#[test]
fn entropy_ball_maximum_bounds_the_grid_maximum() {
    // on [0, 2] the kernel divergence from 1 is largest at the origin, not at 2
    let g = BregmanGeometry::entropy(Domain::NonnegativeOrthant(1)).unwrap();
    let bound = max_divergence_over_ball(&g, &[1.0], 2.0, true).unwrap();
    let grid = (0..=20_000)
        .map(|i| {
            let l = i as f64 * 1e-4;
            if l > 0.0 { l * l.ln() - l + 1.0 } else { 1.0 }
        })
        .fold(0.0, f64::max);
    assert_eq!(grid, 1.0);
    assert!(bound >= grid - 1e-12);
    assert!(bound > 2.0 * 2f64.ln() - 1.0);
    assert!(bound < 2.0, "{bound}");
}

#[test]
fn power_laws_fit_exactly() {
    let ks: Vec<usize> = (1..=200).collect();
    for p in [1.0, 2.0] {
        let v: Vec<f64> = ks.iter().map(|&k| (k as f64).powf(-p)).collect();
        let fit = fit_rate(&ks, &v, (1, 200)).unwrap();
        assert!((fit.slope + p).abs() < 1e-6);
        assert!(fit.r_squared > 1.0 - 1e-12);
    }
}

#[test]
fn log_corrected_rate_sits_between_the_powers() {
    let ks: Vec<usize> = (1..=600).collect();
    let v: Vec<f64> = ks.iter().map(|&k| (k as f64).ln() / (k as f64).powi(2)).collect();
    let fit = fit_rate(&ks, &v, (20, 500)).unwrap();
    assert!(fit.slope > -2.0 && fit.slope < -1.7, "{}", fit.slope);
}

#[test]
fn fit_skips_nonpositive_points() {
    let ks: Vec<usize> = (1..=10).collect();
    let mut v: Vec<f64> = ks.iter().map(|&k| 1.0 / k as f64).collect();
    v[3] = 0.0;
    v[4] = f64::NAN;
    let fit = fit_rate(&ks, &v, (1, 10)).unwrap();
    assert_eq!(fit.dropped, 2);
    assert!(fit_rate(&ks[..4], &v[..4], (1, 4)).is_err());
}

#[test]
fn slack_grows_with_the_magnitudes() {
    assert!((slack(1e-10f64, 0.0, 0.0) - 1e-9).abs() < 1e-24);
    assert!((slack(1e-10f64, -3.0, 5.0) - 9e-9).abs() < 1e-22);
}

proptest! {
    #[test]
    fn constant_iterates_average_to_themselves(c in -100.0f64..100.0, n in 1usize..30, seed in 0u64..100) {
        let mut rng = SeededStream::new(seed, 0);
        let rows = (0..n).map(|k| record(k, rng.uniform(0.1, 10.0), Some(rng.uniform(0.01, 1.0)), c, c)).collect();
        let tr = trace(rows);
        for w in [Weighting::EtaWeights, Weighting::EtaOverThetaWeights] {
            let (x, l) = ergodic_average(&tr, w, n).unwrap();
            prop_assert!((x[0] - c).abs() <= 1e-12 * c.abs().max(1.0));
            prop_assert!((l[0] - c).abs() <= 1e-12 * c.abs().max(1.0));
        }
    }

    #[test]
    fn entropy_ball_bound_dominates_samples(l0 in prop::collection::vec(0.1f64..3.0, 3), rho in 0.5f64..5.0, seed in 0u64..50) {
        let g = BregmanGeometry::entropy(Domain::NonnegativeOrthant(3)).unwrap();
        let bound = max_divergence_over_ball(&g, &l0, rho, true).unwrap();
        let mut rng = SeededStream::new(seed, 1);
        for _ in 0..200 {
            let dir: Vec<f64> = (0..3).map(|_| rng.unit()).collect();
            let n = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
            let r = rho * rng.unit();
            let lam: Vec<f64> = dir.iter().map(|v| v / n * r).collect();
            prop_assert!(g.divergence(&lam, &l0).unwrap() <= bound + 1e-9);
        }
    }
}
