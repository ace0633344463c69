//! Entropic proximal steps on the unit simplex:
//! `argmin_{x ∈ Δ_n} f(x) + KL(x, center)/η`.
//!
//! The optimum satisfies `x ∝ center ⊙ exp(−η g)` for some `g ∈ ∂f(x)`, so
//! the returned point is always formed as `softmax(∇h(center) − η g)`; only
//! `g` is searched for. The prox-gap of a candidate `x` with subgradient `g`
//! is `KL(x, softmax(∇h(center) − η g)) / η`.

use super::smooth::{minimize_on_simplex, SimplexMinimum};
use crate::error::{Error, Result};
use crate::geometry::{BregmanGeometry, MirrorPoint};
use crate::linalg::{dot, log_sum_exp, lu_solve, Matrix};
use crate::problems::Objective;
use crate::scalar::Scalar;

pub(crate) struct SimplexProx<T> {
    pub point: MirrorPoint<T>,
    /// `η ·` prox-gap of the returned point.
    pub residual: T,
    pub iterations: usize,
}

/// Coordinates of the centre below `exp(−CUTOFF)` are held at zero during
/// the Newton solve; they re-enter through the final softmax.
const CUTOFF: f64 = 690.0;

pub(crate) fn entropic_prox<T: Scalar>(
    objective: &Objective<T>,
    geometry: &BregmanGeometry<T>,
    center: &MirrorPoint<T>,
    eta: T,
    tol: T,
    max_iters: usize,
) -> Result<SimplexProx<T>> {
    let u = &center.grad;
    match objective {
        Objective::Linear { c } => {
            let s: Vec<T> = u.iter().zip(c).map(|(&ui, &ci)| ui - eta * ci).collect();
            let point = geometry.mirror_map(&s)?;
            let residual = fixed_point_gap(objective, u, &point.point, eta);
            Ok(SimplexProx { point, residual, iterations: 0 })
        }
        Objective::PiecewiseMax { rows } => piecewise_max_prox(rows, geometry, u, eta, tol, max_iters),
        Objective::Quadratic { .. } | Objective::LogSumExp { .. } => {
            smooth_prox(objective, geometry, center, eta, tol, max_iters)
        }
    }
}

/// `η ·` prox-gap of `x`: `KL(x, softmax(u − η ∇f(x)))`.
pub(crate) fn fixed_point_gap<T: Scalar>(objective: &Objective<T>, u: &[T], x: &[T], eta: T) -> T {
    let g = objective.subgradient(x);
    kl_to_softmax(x, u, &g, eta)
}

fn kl_to_softmax<T: Scalar>(x: &[T], u: &[T], g: &[T], eta: T) -> T {
    let z: Vec<T> = u.iter().zip(g).map(|(&ui, &gi)| ui - eta * gi).collect();
    let lse = log_sum_exp(&z);
    let mut kl = T::zero();
    for (&xi, &zi) in x.iter().zip(&z) {
        if xi > T::zero() {
            kl += xi * (xi.ln() - zi + lse);
        }
    }
    kl.max(T::zero())
}

/// Maximizes the concave dual `ψ(w) = −(1/η) log Σ_i c_i exp(−η (Cᵀw)_i)` over
/// `w ∈ Δ_m`; the primal point is `x(w) = softmax(u − η Cᵀw)` and the
/// prox-gap equals the Frank–Wolfe gap `max_j (Cx)_j − wᵀCx`.
fn piecewise_max_prox<T: Scalar>(
    rows: &Matrix<T>,
    geometry: &BregmanGeometry<T>,
    u: &[T],
    eta: T,
    tol: T,
    max_iters: usize,
) -> Result<SimplexProx<T>> {
    let m = rows.rows();
    let primal = |w: &[T]| -> Vec<T> {
        let ctw = rows.tr_mul_vec(w);
        let z: Vec<T> = u.iter().zip(&ctw).map(|(&ui, &ci)| ui - eta * ci).collect();
        let lse = log_sum_exp(&z);
        let x: Vec<T> = z.iter().map(|&zi| (zi - lse).exp()).collect();
        x
    };
    let oracle = |w: &[T]| {
        let ctw = rows.tr_mul_vec(w);
        let z: Vec<T> = u.iter().zip(&ctw).map(|(&ui, &ci)| ui - T::one() - eta * ci).collect();
        let lse = log_sum_exp(&z);
        let x: Vec<T> = z.iter().map(|&zi| (zi - lse).exp()).collect();
        let cx = rows.mul_vec(&x);
        let value = lse / eta;
        let grad: Vec<T> = cx.iter().map(|&v| -v).collect();
        // η C (diag(x) − xxᵀ) Cᵀ
        let mut hess = rows.weighted_gram_t(&x);
        for p in 0..m {
            for q in 0..m {
                hess[(p, q)] = eta * (hess[(p, q)] - cx[p] * cx[q]);
            }
        }
        (value, grad, hess)
    };
    let w0 = vec![T::one() / T::from_usize_lossy(m); m];
    let SimplexMinimum { x: w, iterations, .. } = minimize_on_simplex(oracle, &w0, eta, tol, max_iters)?;
    let x = primal(&w);
    let cx = rows.mul_vec(&x);
    let fmax = cx.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
    let residual = (eta * (fmax - dot(&w, &cx))).max(T::zero());
    let ctw = rows.tr_mul_vec(&w);
    let s: Vec<T> = u.iter().zip(&ctw).map(|(&ui, &ci)| ui - eta * ci).collect();
    let point = geometry.mirror_map(&s)?;
    Ok(SimplexProx { point, residual, iterations })
}

/// Newton on the KKT system in the log-coordinates of `x`, restricted to the
/// coordinates where the centre has not underflowed.
fn smooth_prox<T: Scalar>(
    objective: &Objective<T>,
    geometry: &BregmanGeometry<T>,
    center: &MirrorPoint<T>,
    eta: T,
    tol: T,
    max_iters: usize,
) -> Result<SimplexProx<T>> {
    let n = center.dim();
    let u = &center.grad;
    let cutoff = T::lit(-CUTOFF);
    let support: Vec<usize> = (0..n).filter(|&i| u[i] - T::one() > cutoff).collect();
    let k = support.len();
    let prox_obj = |x: &[T]| -> T {
        let mut v = objective.value(x);
        for &i in &support {
            if x[i] > T::zero() {
                v += x[i] * (x[i].ln() - u[i]) / eta;
            }
        }
        v
    };
    let mut x = vec![T::zero(); n];
    for &i in &support {
        x[i] = (u[i] - T::one()).exp();
    }
    normalize(&mut x);
    let mut p = prox_obj(&x);
    let mut iterations = 0;
    // the gap is quadratic in the error of x and bottoms out near 1e-16, so
    // once it is below tol Newton keeps going until its steps are negligible
    let mut last_step = T::infinity();
    let mut polish = 0;
    while iterations < max_iters {
        iterations += 1;
        let g = objective.subgradient(&x);
        let gap = kl_to_softmax(&x, u, &g, eta);
        if gap <= tol {
            polish += 1;
            if polish > 8 || last_step <= T::lit(1e-14) {
                break;
            }
        }
        let h = objective
            .hessian(&x)
            .ok_or_else(|| Error::Unsupported("smooth prox needs a Hessian".into()))?;
        let r: Vec<T> = support
            .iter()
            .map(|&i| g[i] + (x[i].ln() + T::one() - u[i]) / eta)
            .collect();
        let mut kkt = Matrix::zeros(k + 1, k + 1);
        let mut rhs = vec![T::zero(); k + 1];
        for (a, &i) in support.iter().enumerate() {
            for (b, &j) in support.iter().enumerate() {
                kkt[(a, b)] = h[(i, j)] * x[j];
            }
            kkt[(a, a)] += T::one() / eta;
            kkt[(a, k)] = T::one();
            kkt[(k, a)] = x[i];
            rhs[a] = -r[a];
        }
        let sol = lu_solve(&kkt, &rhs)?;
        let slope: T = support.iter().enumerate().map(|(a, &i)| r[a] * x[i] * sol[a]).sum();
        let step = support
            .iter()
            .enumerate()
            .fold(T::zero(), |m, (a, &i)| m.max((x[i] * sol[a]).abs()));
        // full steps inside the region of quadratic convergence, where
        // neither the objective nor the gap resolves the decrease
        let local = gap <= T::lit(1e3) * tol && step <= T::lit(1e-6);
        let mut alpha = T::one();
        let mut moved = false;
        for _ in 0..60 {
            let mut xa = x.clone();
            for (a, &i) in support.iter().enumerate() {
                xa[i] = x[i] * (alpha * sol[a]).exp();
            }
            normalize(&mut xa);
            let pa = prox_obj(&xa);
            let ok = local
                || pa <= p + T::lit(1e-4) * alpha * slope.min(T::zero())
                || (gap <= T::lit(1e3) * tol && kl_to_softmax(&xa, u, &objective.subgradient(&xa), eta) < gap);
            if pa.is_finite() && ok {
                x = xa;
                p = pa;
                moved = true;
                last_step = alpha * step;
                break;
            }
            alpha *= T::lit(0.5);
        }
        if !moved {
            break;
        }
    }
    let g = objective.subgradient(&x);
    let s: Vec<T> = u.iter().zip(&g).map(|(&ui, &gi)| ui - eta * gi).collect();
    let point = geometry.mirror_map(&s)?;
    let residual = fixed_point_gap(objective, u, &point.point, eta);
    if residual > tol {
        return Err(Error::InnerMaxIters { iterations, residual: residual.as_f64() });
    }
    Ok(SimplexProx { point, residual, iterations })
}

fn normalize<T: Scalar>(x: &mut [T]) {
    let s: T = x.iter().copied().sum();
    x.iter_mut().for_each(|v| *v /= s);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;

    fn geom(n: usize) -> BregmanGeometry<f64> {
        BregmanGeometry::entropy(Domain::Simplex(n)).unwrap()
    }

    #[test]
    fn linear_closed_form() {
        let g = geom(3);
        let center = g.mirror_point(&[0.2, 0.3, 0.5]).unwrap();
        let c = vec![1.0, -1.0, 0.5];
        let r = entropic_prox(&Objective::Linear { c: c.clone() }, &g, &center, 2.0, 1e-12, 100).unwrap();
        let raw: Vec<f64> = [0.2, 0.3, 0.5].iter().zip(&c).map(|(p, ci)| p * (-2.0 * ci).exp()).collect();
        let z: f64 = raw.iter().sum();
        for (a, b) in r.point.point.iter().zip(&raw) {
            assert!((a - b / z).abs() < 1e-15);
        }
    }

    #[test]
    fn single_piece_reduces_to_linear() {
        let g = geom(3);
        let center = g.mirror_point(&[0.2, 0.3, 0.5]).unwrap();
        let rows = Matrix::from_rows(&[vec![1.0, -1.0, 0.5]]).unwrap();
        let r = entropic_prox(&Objective::PiecewiseMax { rows }, &g, &center, 2.0, 1e-12, 100).unwrap();
        let lin = entropic_prox(&Objective::Linear { c: vec![1.0, -1.0, 0.5] }, &g, &center, 2.0, 1e-12, 100).unwrap();
        for (a, b) in r.point.point.iter().zip(&lin.point.point) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn constant_objective_returns_center() {
        let g = geom(3);
        let center = g.mirror_point(&[0.2, 0.3, 0.5]).unwrap();
        let rows = Matrix::from_rows(&[vec![0.0, 0.0, 0.0]]).unwrap();
        let r = entropic_prox(&Objective::LogSumExp { rows }, &g, &center, 5.0, 1e-12, 100).unwrap();
        for (a, b) in r.point.point.iter().zip(&center.point) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn smooth_prox_meets_gap() {
        let g = geom(4);
        let center = g.mirror_point(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        let rows = Matrix::from_rows(&[vec![1.0, -0.5, 0.3, 0.9], vec![-1.0, 0.2, 0.8, -0.4]]).unwrap();
        let obj = Objective::LogSumExp { rows };
        for eta in [0.1, 1.0, 50.0] {
            let r = entropic_prox(&obj, &g, &center, eta, 1e-12, 200).unwrap();
            assert!(r.residual <= 1e-12, "eta {eta}: {}", r.residual);
        }
    }

    #[test]
    fn piecewise_prox_meets_gap() {
        let g = geom(4);
        let center = g.mirror_point(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        let rows = Matrix::from_rows(&[
            vec![1.0, -0.5, 0.3, 0.9],
            vec![-1.0, 0.2, 0.8, -0.4],
            vec![0.1, 0.7, -0.9, 0.0],
        ])
        .unwrap();
        let obj = Objective::PiecewiseMax { rows };
        for eta in [0.1, 1.0, 50.0] {
            let r = entropic_prox(&obj, &g, &center, eta, 1e-12, 500).unwrap();
            assert!(r.residual <= 1e-12, "eta {eta}: {}", r.residual);
        }
    }
}
