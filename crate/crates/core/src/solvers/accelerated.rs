use super::monitor::{interior_start, Monitor};
use crate::linalg::sub;
use super::{next_theta, Algorithm, RunOptions, RunTrace, StepSchedule};
use crate::error::{Error, Result};
use crate::geometry::{BregmanGeometry, Domain, Kind};
use crate::inner::{ProxEnvironment, ProxMode};
use crate::linalg::dot;
use crate::metrics::BoundId;
use crate::problems::{ConstrainedProblem, Sense};
use crate::scalar::Scalar;

#[derive(Clone, Copy)]
enum Form<T> {
    /// Estimate functions `φ_k = l_k − A_k D(·, λ₀)` with `A₀ = a0`.
    General { a0: T },
    /// `v_{k+1} = ∇h*(∇h(v_k) + (∇h(λ_{k+1}) − ∇h(y_k))/(Gθ_k))`
    Memoryless,
    /// `v_{k+1} = ∇h*(∇h(λ₀) + Σ_j (∇h(λ_{j+1}) − ∇h(y_j))/(Gθ_j))`
    DualAveraging,
}

/// Accelerated proximal point scheme driven by estimate functions. `θ_k`
/// solves `Gθ² = η_k A_k (1 − θ)` and `A_{k+1} = (1 − θ_k) A_k`.
pub fn run_acc_bpp_general<T: Scalar>(
    env: &ProxEnvironment<'_, T>,
    start: &[T],
    schedule: &StepSchedule<T>,
    iters: usize,
    a0: T,
    opts: &RunOptions<'_, T>,
) -> Result<RunTrace<T>> {
    if !(a0 > T::zero()) || !a0.is_finite() {
        return Err(Error::InvalidParameter(format!("A must be positive and finite, got {a0}")));
    }
    accelerated_loop(env, start, schedule, iters, opts, Form::General { a0 }, Algorithm::AccBpp)
}

/// Memoryless accelerated scheme with `θ₀ = 1`. Needs `∇h*` on the whole
/// space, which rules out the Euclidean kernel on the orthant.
pub fn run_acc_bpp_memoryless<T: Scalar>(
    env: &ProxEnvironment<'_, T>,
    start: &[T],
    schedule: &StepSchedule<T>,
    iters: usize,
    opts: &RunOptions<'_, T>,
) -> Result<RunTrace<T>> {
    let g = env.geometry();
    if g.kind() == Kind::Euclidean && matches!(g.domain(), Domain::NonnegativeOrthant(_)) {
        return Err(Error::Unsupported(
            "memoryless form leaves the orthant under the Euclidean kernel; use the dual-averaging form".into(),
        ));
    }
    accelerated_loop(env, start, schedule, iters, opts, Form::Memoryless, Algorithm::AccBpp2)
}

/// Dual-averaging form of the accelerated scheme with `θ₀ = 1`.
pub fn run_acc_bpp_dual_avg<T: Scalar>(
    env: &ProxEnvironment<'_, T>,
    start: &[T],
    schedule: &StepSchedule<T>,
    iters: usize,
    opts: &RunOptions<'_, T>,
) -> Result<RunTrace<T>> {
    accelerated_loop(env, start, schedule, iters, opts, Form::DualAveraging, Algorithm::AccBpp3)
}

/// Accelerated Bregman augmented Lagrangian method: the dual-averaging
/// scheme on the dual, with the ergodic pair weighted by `η_k/θ_k`.
pub fn run_acc_balm<T: Scalar>(
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
    accelerated_loop(&env, lambda0, schedule, iters, opts, Form::DualAveraging, Algorithm::AccBalm)
}

const THETA_TOL: f64 = 1e-10;

fn accelerated_loop<'a, T: Scalar>(
    env: &ProxEnvironment<'a, T>,
    start: &[T],
    schedule: &StepSchedule<T>,
    iters: usize,
    opts: &RunOptions<'a, T>,
    form: Form<T>,
    algorithm: Algorithm,
) -> Result<RunTrace<T>> {
    let geometry = env.geometry();
    let problem = env.problem();
    let dual_mode = env.mode() == ProxMode::DualProx;
    schedule.validate(iters)?;
    let g = geometry.scaling_constant();
    let certified = geometry.triangle_scaling_certified();
    let lam0 = interior_start(geometry, start)?;
    let mut lam = lam0.clone();
    let mut v = lam0.clone();
    let mut mon = Monitor::new(problem, geometry, dual_mode, opts, start, env.inner_tol());
    let dual_start = env.dual_value_at(start);
    let d0_star = mon.star_divergence();
    let inequality = problem.constraint().is_some_and(|c| c.sense == Sense::Inequality);
    let cor_bound = if inequality { BoundId::AcceleratedInequality } else { BoundId::AcceleratedEquality };

    let m = geometry.dim();
    let mut affine = vec![T::zero(); m];
    let mut constant = dual_start;
    let mut big_a = match form {
        Form::General { a0 } => a0,
        _ => T::zero(),
    };
    let mut w = vec![T::zero(); m];
    let mut theta = T::one();
    let mut prev: Option<(T, T)> = None;
    let (mut weight_sum, mut sqrt_sum, mut prod, mut theta_sum) = (T::zero(), T::zero(), T::one(), T::zero());
    let mut warm = vec![T::zero(); problem.dim()];
    // identities are exact, so only round-off separates the two sides
    let tol = T::lit(THETA_TOL).max(T::lit(64.0) * T::epsilon());

    let mut body = |mon: &mut Monitor<'a, T>| -> Result<()> {
        for k in 0..iters {
            let t = k + 1;
            let eta = schedule.eta(k)?;
            if let Form::General { .. } = form {
                let q = big_a * eta / g;
                theta = T::lit(2.0) * q / (q + (q * q + T::lit(4.0) * q).sqrt());
                if !(theta > T::zero() && theta <= T::one()) || !(big_a > T::zero()) {
                    return Err(Error::NumericalInstability(format!(
                        "θ_{k} = {theta} from A_k = {big_a}, η_k = {eta}"
                    )));
                }
                let lhs = (g * theta * theta - eta * big_a * (T::one() - theta)).abs();
                let scale = g * theta * theta + eta * big_a;
                mon.checker.check_with_slack(BoundId::ThetaQuadratic, t, lhs, T::zero(), tol * scale, true)?;
            } else if let Some((eta_p, th_p)) = prev {
                let lhs = (eta_p / (th_p * th_p) - eta / (theta * theta) + eta / theta).abs();
                let scale = eta / (theta * theta);
                mon.checker.check_with_slack(BoundId::ThetaRecursion, t, lhs, T::zero(), tol * scale, true)?;
            }

            let y = geometry.combine(&v, &lam, theta);
            let res = env.prox_step_mirror(&y, eta, dual_mode.then_some(&warm[..]))?;
            let delta = sub(&res.point.grad, &y.grad);
            let d_plus = res.dual_value;

            sqrt_sum += eta.sqrt();
            weight_sum += eta / theta;
            theta_sum += theta;
            prod *= T::one() - theta;

            let mut headline = None;
            match form {
                Form::General { a0 } => {
                    big_a *= T::one() - theta;
                    let s = theta / eta;
                    affine
                        .iter_mut()
                        .zip(&delta)
                        .for_each(|(a, &dl)| *a = (T::one() - theta) * *a + s * dl);
                    constant = constant
                        .map(|c| (T::one() - theta) * c + theta * d_plus - s * dot(&delta, &res.point.point));
                    let shifted: Vec<T> = lam0.grad.iter().zip(&affine).map(|(&gr, &a)| gr + a / big_a).collect();
                    v = geometry.mirror_map(&shifted)?;

                    let r = (a0 / g).sqrt() * sqrt_sum;
                    let lo = T::one() / ((T::one() + r) * (T::one() + r));
                    let hi = T::one() / ((T::one() + T::lit(0.5) * r) * (T::one() + T::lit(0.5) * r));
                    let band_slack = T::lit(1e-12) * hi;
                    mon.checker.check_with_slack(BoundId::ProductBand, t, lo, prod, band_slack, true)?;
                    mon.checker.check_with_slack(BoundId::ProductBand, t, prod, hi, band_slack, true)?;
                    if let Some(c) = constant {
                        let div = geometry.divergence_on_support(&v.point, &lam0.point)?;
                        let phi = c + dot(&affine, &v.point) - big_a * div;
                        mon.checker.check(BoundId::EstimateDominance, t, phi, d_plus, certified)?;
                    }
                    if let (Some(ds), Some(d0), Some(dd)) = (mon.d_star, dual_start, d0_star) {
                        let (lhs, rhs) = (ds - d_plus, prod * (ds - d0 + a0 * dd));
                        mon.checker.check(BoundId::EstimateDualGap, t, lhs, rhs, certified)?;
                        headline = Some((BoundId::EstimateDualGap, lhs, rhs));
                    }
                }
                Form::Memoryless => {
                    let s = T::one() / (g * theta);
                    let shifted: Vec<T> = v.grad.iter().zip(&delta).map(|(&gv, &dl)| gv + s * dl).collect();
                    v = geometry.mirror_map(&shifted)?;
                    if let (Some(ds), Some(dd)) = (mon.d_star, d0_star) {
                        let (lhs, rhs) = (ds - d_plus, T::lit(4.0) * g * dd / (sqrt_sum * sqrt_sum));
                        mon.checker.check(BoundId::MemorylessDualGap, t, lhs, rhs, certified)?;
                        headline = Some((BoundId::MemorylessDualGap, lhs, rhs));
                    }
                }
                Form::DualAveraging => {
                    let s = T::one() / (g * theta);
                    w.iter_mut().zip(&delta).for_each(|(wi, &dl)| *wi += s * dl);
                    let shifted: Vec<T> = lam0.grad.iter().zip(&w).map(|(&gr, &wi)| gr + wi).collect();
                    v = geometry.mirror_map(&shifted)?;
                    let target = eta / (theta * theta);
                    mon.checker.check_with_slack(
                        BoundId::WeightSum,
                        t,
                        (weight_sum - target).abs(),
                        T::zero(),
                        tol * target,
                        true,
                    )?;
                    let factor = theta * theta * g / eta;
                    if dual_mode {
                        if let (Some(ds), Some(dd)) = (mon.d_star, d0_star) {
                            let (lhs, rhs) = (ds - d_plus, factor * dd);
                            mon.checker.check(BoundId::DualAveragingGap, t, lhs, rhs, certified)?;
                            headline = Some((BoundId::DualAveragingGap, lhs, rhs));
                        }
                    } else {
                        let samples = mon.lambda_samples(&res.point.point);
                        let mut pairs = Vec::with_capacity(samples.len());
                        for l in &samples {
                            let d = mon.dual_at(l).ok_or(Error::MissingField("d(lambda)"))?;
                            let div = geometry.divergence_on_support(l, &lam0.point)?;
                            pairs.push((d - d_plus, factor * div));
                        }
                        mon.checker.check_worst(BoundId::DualAveragingGap, t, pairs, certified)?;
                        if let (Some(ds), Some(dd)) = (mon.d_star, d0_star) {
                            headline = Some((BoundId::DualAveragingGap, ds - d_plus, factor * dd));
                        }
                    }
                }
            }
            if !matches!(form, Form::General { .. }) {
                let lo = eta.sqrt() / sqrt_sum;
                let band_slack = T::lit(1e-12) * lo;
                mon.checker.check_with_slack(BoundId::ThetaBand, t, lo, theta, band_slack, true)?;
                mon.checker.check_with_slack(BoundId::ThetaBand, t, theta, T::lit(2.0) * lo, band_slack, true)?;
            }

            let mut rec = mon.record(
                k,
                eta,
                Some(theta),
                &res.point,
                res.x.clone(),
                Some(d_plus),
                eta / theta,
                (res.inner_iterations, res.residual),
            );
            if algorithm == Algorithm::AccBalm {
                if let Some(ball) = mon.ball_max(inequality)? {
                    let num = g * ball * (T::one() + theta_sum);
                    if let Some((lhs, rhs)) = mon.ergodic_bound(cor_bound, t, num, weight_sum, certified)? {
                        headline = Some((cor_bound, lhs, rhs));
                    }
                }
            }
            if let Some((b, l, r)) = headline {
                rec.bound = Some(b);
                rec.bound_lhs = Some(l);
                rec.bound_rhs = Some(r);
            }
            rec.y = Some(y.point);
            rec.v = Some(v.point.clone());
            mon.records.push(rec);
            if let Some(x) = &res.x {
                warm.clone_from(x);
            }
            lam = res.point;
            if !matches!(form, Form::General { .. }) && t < iters {
                prev = Some((eta, theta));
                theta = next_theta(theta, eta, schedule.eta(t)?);
            }
        }
        Ok(())
    };
    let failure = body(&mut mon).err();
    Ok(mon.finish(algorithm, dual_start, failure))
}
