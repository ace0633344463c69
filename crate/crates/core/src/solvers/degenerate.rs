use super::monitor::{interior_start, Monitor};
use super::{Algorithm, RunOptions, RunTrace};
use crate::error::{Error, Result};
use crate::inner::{ProxEnvironment, ProxMode};
use crate::linalg::lerp;
use crate::metrics::BoundId;
use crate::scalar::Scalar;

/// `θ_{k+1}` from `(1 − θ_{k+1})/θ_{k+1}² = 1/θ_k²`.
pub(crate) fn next_theta_degenerate<T: Scalar>(theta: T) -> T {
    let t2 = theta * theta;
    T::lit(0.5) * ((t2 * t2 + T::lit(4.0) * t2).sqrt() - t2)
}

/// Accelerated Bregman proximal gradient with a zero smooth part:
///
/// ```text
/// y_k     = (1 − θ_k) μ_k + θ_k λ_k
/// λ_{k+1} = argmax d(λ) − θ_k L D(λ, λ_k)
/// μ_{k+1} = (1 − θ_k) μ_k + θ_k λ_{k+1}
/// ```
///
/// with `θ₀ = 1`, `μ₀ = λ₀`. The record's `v` field holds `μ_{k+1}` and the
/// checked bound is `d* − d(μ_T) ≤ 4L D(λ*, μ₀)/T²`, available for direct
/// problems where `d` has a closed form.
pub fn run_abpg_degenerate<T: Scalar>(
    env: &ProxEnvironment<'_, T>,
    start: &[T],
    iters: usize,
    l: T,
    opts: &RunOptions<'_, T>,
) -> Result<RunTrace<T>> {
    if !(l > T::zero()) || !l.is_finite() {
        return Err(Error::InvalidParameter(format!("L must be positive and finite, got {l}")));
    }
    let geometry = env.geometry();
    let problem = env.problem();
    let dual_mode = env.mode() == ProxMode::DualProx;
    let mut lam = interior_start(geometry, start)?;
    let mut mu = start.to_vec();
    let mut mon = Monitor::new(problem, geometry, dual_mode, opts, start, env.inner_tol());
    let dual_start = env.dual_value_at(start);
    let d0_star = mon.star_divergence();
    let certified = geometry.triangle_scaling_certified();
    let mut theta = T::one();
    let mut warm = vec![T::zero(); problem.dim()];

    let mut body = |mon: &mut Monitor<'_, T>| -> Result<()> {
        for k in 0..iters {
            let t = k + 1;
            let eta = T::one() / (theta * l);
            let y = lerp(&mu, &lam.point, theta);
            let res = env.prox_step_mirror(&lam, eta, dual_mode.then_some(&warm[..]))?;
            mu = lerp(&mu, &res.point.point, theta);
            let mut rec = mon.record(
                k,
                eta,
                Some(theta),
                &res.point,
                res.x.clone(),
                Some(res.dual_value),
                eta,
                (res.inner_iterations, res.residual),
            );
            if let (Some(ds), Some(dmu), Some(dd)) = (mon.d_star, mon.dual_at(&mu), d0_star) {
                let tt = T::from_usize_lossy(t);
                let (lhs, rhs) = (ds - dmu, T::lit(4.0) * l * dd / (tt * tt));
                mon.checker.check(BoundId::DegenerateDualGap, t, lhs, rhs, certified)?;
                rec.bound = Some(BoundId::DegenerateDualGap);
                rec.bound_lhs = Some(lhs);
                rec.bound_rhs = Some(rhs);
            }
            rec.y = Some(y);
            rec.v = Some(mu.clone());
            mon.records.push(rec);
            if let Some(x) = &res.x {
                warm.clone_from(x);
            }
            lam = res.point;
            theta = next_theta_degenerate(theta);
        }
        Ok(())
    };
    let failure = body(&mut mon).err();
    Ok(mon.finish(Algorithm::Abpg0, dual_start, failure))
}
