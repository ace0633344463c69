use crate::error::{check_dim, Error, Result};
use crate::geometry::{BregmanGeometry, Domain, Kind};
use crate::linalg::norm2;
use crate::scalar::Scalar;

/// `max D(λ, λ₀)` over `‖λ‖ ≤ ρ`, restricted to `λ ≥ 0` when `nonneg` is set
/// or the kernel is the entropy.
///
/// Euclidean: closed form, `½(ρ + ‖λ₀‖)²` on the full ball and
/// `½ max(‖λ₀‖², ρ² − 2ρ minᵢ λ₀ᵢ + ‖λ₀‖²)` on the nonnegative part.
///
/// Entropy: the Lagrangian dual of the ball constraint,
/// `min_{μ>0} μρ² + Σᵢ max_{t≥0} (t log(t/λ₀ᵢ) − t + λ₀ᵢ − μt²)`, minimized
/// by bisection on its derivative. The result is an upper bound on the
/// maximum (the problem is a convex maximization, so the dual need not be
/// tight), which keeps every bound that uses it valid.
pub fn max_divergence_over_ball<T: Scalar>(
    geometry: &BregmanGeometry<T>,
    lambda0: &[T],
    rho: T,
    nonneg: bool,
) -> Result<T> {
    check_dim(geometry.dim(), lambda0.len())?;
    if !(rho >= T::zero()) || !rho.is_finite() {
        return Err(Error::InvalidParameter(format!("ball radius must be nonnegative, got {rho}")));
    }
    if matches!(geometry.domain(), Domain::Simplex(_)) {
        return Err(Error::Unsupported("ball maximum over a simplex domain".into()));
    }
    let half = T::lit(0.5);
    match geometry.kind() {
        Kind::Euclidean => {
            let n0 = norm2(lambda0);
            if nonneg {
                let min0 = lambda0.iter().copied().fold(T::infinity(), T::min);
                let min0 = if lambda0.is_empty() { T::zero() } else { min0 };
                let far = rho * rho - T::lit(2.0) * rho * min0 + n0 * n0;
                Ok(half * far.max(n0 * n0))
            } else {
                Ok(half * (rho + n0) * (rho + n0))
            }
        }
        Kind::Entropy => entropy_ball_dual(lambda0, rho),
    }
}

/// `max_{t≥0} t log(t/a) − t + a − μt²` and its maximizer.
fn coordinate_max<T: Scalar>(a: T, mu: T) -> (T, T) {
    let two = T::lit(2.0);
    let peak = -(two * mu * a).ln() - T::one();
    if !(peak > T::zero()) {
        return (a, T::zero());
    }
    // larger root of log(t/a) = 2μt, where the derivative turns negative
    let q = |t: T| (t / a).ln() - two * mu * t;
    let mut lo = T::one() / (two * mu);
    let mut hi = lo * two;
    while q(hi) > T::zero() {
        lo = hi;
        hi = hi * two;
    }
    for _ in 0..200 {
        let mid = half_way(lo, hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if q(mid) > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = hi;
    let v = t * (t / a).ln() - t + a - mu * t * t;
    if v > a {
        (v, t)
    } else {
        (a, T::zero())
    }
}

fn half_way<T: Scalar>(lo: T, hi: T) -> T {
    lo + T::lit(0.5) * (hi - lo)
}

fn entropy_ball_dual<T: Scalar>(lambda0: &[T], rho: T) -> Result<T> {
    for (i, &a) in lambda0.iter().enumerate() {
        if !(a > T::zero()) {
            return Err(Error::NonPositiveComponent { index: i, value: a.as_f64() });
        }
    }
    let total: T = lambda0.iter().copied().sum();
    if rho == T::zero() {
        return Ok(total);
    }
    let r2 = rho * rho;
    let eval = |mu: T| -> (T, T) {
        let mut value = mu * r2;
        let mut sq = T::zero();
        for &a in lambda0 {
            let (v, t) = coordinate_max(a, mu);
            value += v;
            sq += t * t;
        }
        (value, r2 - sq)
    };
    let (mut lo, mut hi) = (T::one(), T::one());
    while eval(lo).1 >= T::zero() && lo > T::lit(1e-300) {
        lo = lo * T::lit(0.125);
    }
    while eval(hi).1 < T::zero() {
        hi = hi * T::lit(8.0);
    }
    let mut best = eval(lo).0.min(eval(hi).0);
    // bisection on log μ
    for _ in 0..200 {
        if hi / lo <= T::one() + T::lit(1e-12) {
            break;
        }
        let mid = (lo * hi).sqrt();
        let (v, d) = eval(mid);
        best = best.min(v);
        if d < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best)
}
