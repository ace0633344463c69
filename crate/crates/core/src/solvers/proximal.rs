use super::monitor::{interior_start, Monitor};
use crate::linalg::sub;
use super::{Algorithm, RunOptions, RunTrace, StepSchedule};
use crate::error::{Error, Result};
use crate::geometry::{BregmanGeometry, MirrorPoint};
use crate::inner::{ProxEnvironment, ProxMode, ProxResult};
use crate::linalg::{dot, norm2};
use crate::metrics::BoundId;
use crate::problems::{ConstrainedProblem, Sense};
use crate::scalar::Scalar;

/// Bregman proximal point iteration `λ_{k+1} = argmax d(λ) − D(λ, λ_k)/η_k`.
///
/// Checked each step: the one-step prox inequality on sampled `λ` (direct
/// problems) or the one-step saddle inequality on sampled `(x, λ)`
/// (constrained problems), monotonicity of `d(λ_k)`, monotonicity of
/// `D(λ*, λ_k)`, and `d* − d(λ_T) ≤ D(λ*, λ₀)/Σ η_k`.
pub fn run_bpp<T: Scalar>(
    env: &ProxEnvironment<'_, T>,
    start: &[T],
    schedule: &StepSchedule<T>,
    iters: usize,
    opts: &RunOptions<'_, T>,
) -> Result<RunTrace<T>> {
    proximal_loop(env, start, schedule, iters, opts, Algorithm::Bpp)
}

/// Bregman augmented Lagrangian method: the proximal point iteration on the
/// dual of `min f(x) s.t. Ax ≤ b` (or `= b`). Adds the ergodic pair with
/// weights `η_k` and its primal gap/feasibility bound.
pub fn run_balm<T: Scalar>(
    problem: &ConstrainedProblem<T>,
    geometry: &BregmanGeometry<T>,
    lambda0: &[T],
    schedule: &StepSchedule<T>,
    iters: usize,
    opts: &RunOptions<'_, T>,
) -> Result<RunTrace<T>> {
    let env = ProxEnvironment::new(problem, geometry, ProxMode::DualProx)?
        .with_inner_tol(opts.inner_tol)?
        .with_inner_max_iters(opts.inner_max_iters);
    proximal_loop(&env, lambda0, schedule, iters, opts, Algorithm::Balm)
}

fn proximal_loop<'a, T: Scalar>(
    env: &ProxEnvironment<'a, T>,
    start: &[T],
    schedule: &StepSchedule<T>,
    iters: usize,
    opts: &RunOptions<'a, T>,
    algorithm: Algorithm,
) -> Result<RunTrace<T>> {
    let geometry = env.geometry();
    let problem = env.problem();
    let dual_mode = env.mode() == ProxMode::DualProx;
    schedule.validate(iters)?;
    let mut cur = interior_start(geometry, start)?;
    let mut mon = Monitor::new(problem, geometry, dual_mode, opts, start, env.inner_tol());
    let dual_start = env.dual_value_at(start);
    let d0_star = mon.star_divergence();
    let inequality = problem.constraint().is_some_and(|c| c.sense == Sense::Inequality);
    let thm_bound = if inequality { BoundId::ErgodicInequality } else { BoundId::ErgodicEquality };

    let mut d_prev = dual_start;
    let mut dist_prev = mon.lambda_star.as_ref().map(|ls| geometry.divergence_mirror(ls, &cur));
    let mut eta_sum = T::zero();
    let mut warm = vec![T::zero(); problem.dim()];

    let mut body = |mon: &mut Monitor<'a, T>| -> Result<()> {
        for k in 0..iters {
            let t = k + 1;
            let eta = schedule.eta(k)?;
            let res = env.prox_step_mirror(&cur, eta, dual_mode.then_some(&warm[..]))?;
            if dual_mode {
                saddle_step(mon, &cur, &res, eta, t)?;
            } else {
                prox_inequality(mon, &cur, &res, eta, t)?;
            }
            if let Some(dp) = d_prev {
                mon.checker.check(BoundId::DualMonotone, t, dp, res.dual_value, true)?;
            }
            if let Some(ls) = &mon.lambda_star {
                let dist = geometry.divergence_mirror(ls, &res.point);
                if let Some(prev) = dist_prev {
                    mon.checker.check(BoundId::DistanceMonotone, t, dist, prev, true)?;
                }
                dist_prev = Some(dist);
            }
            eta_sum += eta;
            let mut headline = None;
            if let (Some(ds), Some(d0)) = (mon.d_star, d0_star) {
                let (lhs, rhs) = (ds - res.dual_value, d0 / eta_sum);
                mon.checker.check(BoundId::ProxDualGap, t, lhs, rhs, true)?;
                headline = Some((BoundId::ProxDualGap, lhs, rhs));
            }
            let mut rec = mon.record(
                k,
                eta,
                None,
                &res.point,
                res.x.clone(),
                Some(res.dual_value),
                eta,
                (res.inner_iterations, res.residual),
            );
            if algorithm == Algorithm::Balm {
                mon.ergodic_saddle(t, &res.point.point, eta_sum)?;
                if let Some(ball) = mon.ball_max(inequality)? {
                    if let Some((lhs, rhs)) = mon.ergodic_bound(thm_bound, t, ball, eta_sum, true)? {
                        headline = Some((thm_bound, lhs, rhs));
                    }
                }
            }
            if let Some((b, l, r)) = headline {
                rec.bound = Some(b);
                rec.bound_lhs = Some(l);
                rec.bound_rhs = Some(r);
            }
            mon.records.push(rec);
            if let Some(x) = &res.x {
                warm.clone_from(x);
            }
            d_prev = Some(res.dual_value);
            cur = res.point;
        }
        Ok(())
    };
    let failure = body(&mut mon).err();
    Ok(mon.finish(algorithm, dual_start, failure))
}

/// `η(d(λ) − d(λ⁺)) ≤ ⟨∇h(λ⁺) − ∇h(λ_k), λ − λ⁺⟩`, the three-point form of
/// `D(λ,λ_k) − D(λ,λ⁺) − D(λ⁺,λ_k)`.
pub(crate) fn prox_inequality<T: Scalar>(
    mon: &mut Monitor<'_, T>,
    center: &MirrorPoint<T>,
    res: &ProxResult<T>,
    eta: T,
    t: usize,
) -> Result<()> {
    let delta = sub(&res.point.grad, &center.grad);
    let samples = mon.lambda_samples(&res.point.point);
    let mut pairs = Vec::with_capacity(samples.len());
    for l in &samples {
        let d = mon.dual_at(l).ok_or(Error::MissingField("d(lambda)"))?;
        let lhs = eta * (d - res.dual_value);
        let rhs = dot(&delta, &sub(l, &res.point.point));
        pairs.push((lhs, rhs));
    }
    mon.checker.check_worst(BoundId::ProxInequality, t, pairs, true)
}

/// `L(x⁺, λ) − L(x, λ⁺) ≤ ⟨∇h(λ⁺) − ∇h(y), λ − λ⁺⟩/η`. Primal samples are
/// taken at distance `1/(1 + ‖∇f(x⁺)‖)` so that the inexactness of `x⁺`
/// contributes at most the inner tolerance.
pub(crate) fn saddle_step<T: Scalar>(
    mon: &mut Monitor<'_, T>,
    center: &MirrorPoint<T>,
    res: &ProxResult<T>,
    eta: T,
    t: usize,
) -> Result<()> {
    let x_plus = res.x.as_ref().ok_or(Error::MissingField("x"))?;
    let lam_plus = &res.point.point;
    let delta = sub(&res.point.grad, &center.grad);
    let radius = T::one() / (T::one() + norm2(&mon.problem.objective().subgradient(x_plus)));
    let lambdas = mon.lambda_samples(lam_plus);
    let xs = mon.x_samples(x_plus, radius);
    let mut pairs = Vec::with_capacity(lambdas.len());
    for (i, l) in lambdas.iter().enumerate() {
        let x = xs.get(i).map_or(&x_plus[..], |v| &v[..]);
        let lhs = mon.problem.lagrangian(x_plus, l) - mon.problem.lagrangian(x, lam_plus);
        let rhs = dot(&delta, &sub(l, lam_plus)) / eta;
        pairs.push((lhs, rhs));
    }
    mon.checker.check_worst(BoundId::SaddleStep, t, pairs, true)
}
