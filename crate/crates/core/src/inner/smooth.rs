//! Generic smooth minimizers: L-BFGS with a strong-Wolfe line search, a damped
//! Newton method, and an active-set Newton method over the unit simplex.

use crate::error::{Error, Result};
use crate::linalg::{dot, lu_solve, norm2, Cholesky, Matrix};
use crate::scalar::Scalar;

const LBFGS_MEMORY: usize = 8;

#[derive(Debug, Clone)]
pub struct Minimum<T> {
    pub x: Vec<T>,
    pub value: T,
    pub grad_norm: T,
    pub iterations: usize,
}

/// L-BFGS. Stops when `‖∇F(x)‖ ≤ tol·(1 + ‖∇F(x0)‖)`.
pub fn smooth_minimize<T: Scalar>(
    oracle: impl Fn(&[T]) -> (T, Vec<T>),
    x0: &[T],
    tol: T,
    max_iters: usize,
) -> Result<Minimum<T>> {
    let mut x = x0.to_vec();
    let (mut f, mut g) = oracle(&x);
    if !f.is_finite() {
        return Err(Error::NumericalInstability("objective not finite at the start point".into()));
    }
    let target = tol * (T::one() + norm2(&g));
    let mut s_hist: Vec<Vec<T>> = Vec::new();
    let mut y_hist: Vec<Vec<T>> = Vec::new();
    for it in 0..max_iters {
        let gn = norm2(&g);
        if gn <= target {
            return Ok(Minimum { x, value: f, grad_norm: gn, iterations: it });
        }
        let mut d = two_loop(&g, &s_hist, &y_hist);
        if dot(&d, &g) >= T::zero() {
            d = g.iter().map(|&v| -v).collect();
            s_hist.clear();
            y_hist.clear();
        }
        let step0 = if s_hist.is_empty() { (T::one() / gn).min(T::one()) } else { T::one() };
        let Some((alpha, f_new, g_new)) = wolfe_search(&oracle, &x, f, &g, &d, step0) else {
            if s_hist.is_empty() {
                return Err(Error::InnerMaxIters { iterations: it, residual: gn.as_f64() });
            }
            s_hist.clear();
            y_hist.clear();
            continue;
        };
        let s: Vec<T> = d.iter().map(|&v| alpha * v).collect();
        let x_new: Vec<T> = x.iter().zip(&s).map(|(&a, &b)| a + b).collect();
        let y: Vec<T> = g_new.iter().zip(&g).map(|(&a, &b)| a - b).collect();
        if dot(&s, &y) > T::epsilon() * norm2(&s) * norm2(&y) {
            if s_hist.len() == LBFGS_MEMORY {
                s_hist.remove(0);
                y_hist.remove(0);
            }
            s_hist.push(s);
            y_hist.push(y);
        }
        x = x_new;
        f = f_new;
        g = g_new;
    }
    let gn = norm2(&g);
    if gn <= target {
        Ok(Minimum { x, value: f, grad_norm: gn, iterations: max_iters })
    } else {
        Err(Error::InnerMaxIters { iterations: max_iters, residual: gn.as_f64() })
    }
}

fn two_loop<T: Scalar>(g: &[T], s_hist: &[Vec<T>], y_hist: &[Vec<T>]) -> Vec<T> {
    let mut q = g.to_vec();
    let k = s_hist.len();
    let mut alphas = vec![T::zero(); k];
    for i in (0..k).rev() {
        let rho = T::one() / dot(&y_hist[i], &s_hist[i]);
        alphas[i] = rho * dot(&s_hist[i], &q);
        q.iter_mut().zip(&y_hist[i]).for_each(|(qi, &yi)| *qi -= alphas[i] * yi);
    }
    if k > 0 {
        let gamma = dot(&s_hist[k - 1], &y_hist[k - 1]) / dot(&y_hist[k - 1], &y_hist[k - 1]);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for i in 0..k {
        let rho = T::one() / dot(&y_hist[i], &s_hist[i]);
        let beta = rho * dot(&y_hist[i], &q);
        q.iter_mut().zip(&s_hist[i]).for_each(|(qi, &si)| *qi += (alphas[i] - beta) * si);
    }
    q.iter().map(|&v| -v).collect()
}

/// Strong-Wolfe bracketing and zoom (c1 = 1e-4, c2 = 0.9).
fn wolfe_search<T: Scalar>(
    oracle: &impl Fn(&[T]) -> (T, Vec<T>),
    x: &[T],
    f0: T,
    g0: &[T],
    d: &[T],
    step0: T,
) -> Option<(T, T, Vec<T>)> {
    let c1 = T::lit(1e-4);
    let c2 = T::lit(0.9);
    let dg0 = dot(g0, d);
    let eval = |a: T| {
        let xa: Vec<T> = x.iter().zip(d).map(|(&xi, &di)| xi + a * di).collect();
        let (f, g) = oracle(&xa);
        let dg = dot(&g, d);
        (f, g, dg)
    };
    let mut a_prev = T::zero();
    let mut f_prev = f0;
    let mut dg_prev = dg0;
    let mut a = step0;
    for i in 0..40 {
        let (f, g, dg) = eval(a);
        if !f.is_finite() {
            a = T::lit(0.5) * (a_prev + a);
            continue;
        }
        if f > f0 + c1 * a * dg0 || (i > 0 && f >= f_prev) {
            return zoom(&eval, f0, dg0, (a_prev, f_prev, dg_prev), (a, f), c1, c2);
        }
        if dg.abs() <= -c2 * dg0 {
            return Some((a, f, g));
        }
        if dg >= T::zero() {
            return zoom(&eval, f0, dg0, (a, f, dg), (a_prev, f_prev), c1, c2);
        }
        a_prev = a;
        f_prev = f;
        dg_prev = dg;
        a = a * T::lit(2.0);
    }
    None
}

fn zoom<T: Scalar>(
    eval: &impl Fn(T) -> (T, Vec<T>, T),
    f0: T,
    dg0: T,
    lo: (T, T, T),
    hi: (T, T),
    c1: T,
    c2: T,
) -> Option<(T, T, Vec<T>)> {
    let (mut a_lo, mut f_lo, mut dg_lo) = lo;
    let (mut a_hi, mut f_hi) = hi;
    for _ in 0..60 {
        // quadratic interpolation, safeguarded towards bisection
        let width = a_hi - a_lo;
        let denom = T::lit(2.0) * (f_hi - f_lo - dg_lo * width);
        let mut a = if denom > T::zero() {
            a_lo - dg_lo * width * width / denom
        } else {
            a_lo + T::lit(0.5) * width
        };
        let (l, h) = if a_lo < a_hi { (a_lo, a_hi) } else { (a_hi, a_lo) };
        let margin = T::lit(0.1) * (h - l);
        if !(a > l + margin && a < h - margin) {
            a = T::lit(0.5) * (a_lo + a_hi);
        }
        let (f, g, dg) = eval(a);
        if !f.is_finite() || f > f0 + c1 * a * dg0 || f >= f_lo {
            a_hi = a;
            f_hi = f;
        } else {
            if dg.abs() <= -c2 * dg0 {
                return Some((a, f, g));
            }
            if dg * (a_hi - a_lo) >= T::zero() {
                a_hi = a_lo;
                f_hi = f_lo;
            }
            a_lo = a;
            f_lo = f;
            dg_lo = dg;
        }
        if (a_hi - a_lo).abs() <= T::epsilon() * a_lo.abs().max(T::one()) {
            break;
        }
    }
    if a_lo > T::zero() && f_lo < f0 {
        let (f, g, _) = eval(a_lo);
        return Some((a_lo, f, g));
    }
    None
}

/// Damped Newton with Armijo backtracking. `oracle` returns value, gradient and
/// Hessian; `residual` maps a gradient to the stopping measure. After the
/// tolerance is met, up to two further steps are taken while they reduce the
/// residual.
pub fn newton_minimize<T: Scalar>(
    oracle: impl Fn(&[T]) -> (T, Vec<T>, Option<Matrix<T>>),
    residual: impl Fn(&[T], &[T]) -> T,
    x0: &[T],
    tol: T,
    max_iters: usize,
) -> Result<Minimum<T>> {
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut f, mut g, mut h) = oracle(&x);
    if !f.is_finite() {
        return Err(Error::NumericalInstability("objective not finite at the start point".into()));
    }
    let mut polish = 0;
    for it in 0..max_iters {
        let r = residual(&x, &g);
        if r <= tol {
            polish += 1;
            if polish > 2 {
                return Ok(Minimum { x, value: f, grad_norm: r, iterations: it });
            }
        }
        let Some(hess) = h.take() else {
            return Err(Error::Unsupported("Newton step without a Hessian".into()));
        };
        let d = regularized_newton_direction(&hess, &g, n)?;
        let dg = dot(&d, &g);
        let mut alpha = T::one();
        let mut accepted = None;
        for _ in 0..60 {
            let xa: Vec<T> = x.iter().zip(&d).map(|(&xi, &di)| xi + alpha * di).collect();
            let (fa, ga, ha) = oracle(&xa);
            if fa.is_finite() && fa <= f + T::lit(1e-4) * alpha * dg {
                accepted = Some((xa, fa, ga, ha));
                break;
            }
            // near the optimum round-off can hide the decrease: accept if the
            // residual still shrinks
            if fa.is_finite() && r <= T::lit(1e3) * tol && residual(&xa, &ga) < r {
                accepted = Some((xa, fa, ga, ha));
                break;
            }
            alpha *= T::lit(0.5);
        }
        match accepted {
            Some((xa, fa, ga, ha)) => {
                let r_new = residual(&xa, &ga);
                if r <= tol && r_new >= r {
                    return Ok(Minimum { x, value: f, grad_norm: r, iterations: it });
                }
                x = xa;
                f = fa;
                g = ga;
                h = ha;
            }
            None => {
                let r = residual(&x, &g);
                if r <= tol {
                    return Ok(Minimum { x, value: f, grad_norm: r, iterations: it });
                }
                return Err(Error::InnerMaxIters { iterations: it, residual: r.as_f64() });
            }
        }
    }
    let r = residual(&x, &g);
    if r <= tol {
        Ok(Minimum { x, value: f, grad_norm: r, iterations: max_iters })
    } else {
        Err(Error::InnerMaxIters { iterations: max_iters, residual: r.as_f64() })
    }
}

fn regularized_newton_direction<T: Scalar>(h: &Matrix<T>, g: &[T], n: usize) -> Result<Vec<T>> {
    let scale = (0..n).fold(T::zero(), |m, i| m.max(h[(i, i)].abs())).max(T::one());
    let mut delta = T::lit(1e-14) * scale;
    for _ in 0..12 {
        let mut hr = h.clone();
        hr.add_diagonal(delta);
        if let Ok(ch) = Cholesky::factor(&hr, T::lit(1e-15)) {
            return Ok(ch.solve(&g.iter().map(|&v| -v).collect::<Vec<_>>()));
        }
        delta *= T::lit(100.0);
    }
    Err(Error::NumericalInstability("Hessian could not be regularized".into()))
}

#[derive(Debug, Clone)]
pub struct SimplexMinimum<T> {
    pub x: Vec<T>,
    pub value: T,
    /// Frank–Wolfe gap `∇F(x)ᵀx − min_i ∇F(x)_i`.
    pub gap: T,
    pub iterations: usize,
}

/// Active-set Newton for `min_{x ∈ Δ} F(x)` with `F` smooth convex.
/// Stops when `gap_scale · fw_gap ≤ tol`.
pub fn minimize_on_simplex<T: Scalar>(
    oracle: impl Fn(&[T]) -> (T, Vec<T>, Matrix<T>),
    x0: &[T],
    gap_scale: T,
    tol: T,
    max_iters: usize,
) -> Result<SimplexMinimum<T>> {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut active: Vec<bool> = x.iter().map(|&v| v > T::zero()).collect();
    let (mut f, mut g, mut h) = oracle(&x);
    let mut iters = 0;
    let fw_gap = |x: &[T], g: &[T]| {
        let gmin = g.iter().fold(T::infinity(), |m, &v| m.min(v));
        (dot(g, x) - gmin).max(T::zero())
    };
    while iters < max_iters {
        iters += 1;
        let gap = fw_gap(&x, &g);
        if gap_scale * gap <= tol {
            return Ok(SimplexMinimum { x, value: f, gap, iterations: iters });
        }
        let face: Vec<usize> = (0..n).filter(|&i| active[i]).collect();
        let k = face.len();
        // face multiplier and reduced gradient
        let nu = face.iter().map(|&i| g[i] * x[i]).sum::<T>() / face.iter().map(|&i| x[i]).sum::<T>();
        let in_face_violation = face.iter().fold(T::zero(), |m, &i| m.max((g[i] - nu).abs()));
        let (entering, worst) = (0..n)
            .filter(|&i| !active[i])
            .map(|i| (i, g[i] - nu))
            .fold((None, T::zero()), |(bi, bv), (i, v)| if v < bv { (Some(i), v) } else { (bi, bv) });
        if let Some(j) = entering {
            if gap_scale * in_face_violation <= tol || -worst > in_face_violation {
                active[j] = true;
                continue;
            }
        }
        if k <= 1 {
            // vertex with no improving coordinate outside: the gap must come
            // from round-off
            return Ok(SimplexMinimum { x, value: f, gap, iterations: iters });
        }
        // equality-constrained Newton step on the face, regularized until it
        // is a descent direction
        let scale = face.iter().fold(T::one(), |m, &i| m.max(h[(i, i)].abs()));
        let mut delta = T::lit(1e-13) * scale;
        let mut d = vec![T::zero(); n];
        let mut dg = T::zero();
        // slopes are measured against the face-centred gradient: d sums to
        // zero, and the mean would otherwise contribute pure round-off
        let mean = face.iter().map(|&i| g[i]).sum::<T>() / T::from_usize_lossy(k);
        let tangent_slope = |d: &[T]| face.iter().map(|&i| d[i] * (g[i] - mean)).sum::<T>();
        for _ in 0..8 {
            let mut kkt = Matrix::zeros(k + 1, k + 1);
            let mut rhs = vec![T::zero(); k + 1];
            for (p, &i) in face.iter().enumerate() {
                for (q, &j) in face.iter().enumerate() {
                    kkt[(p, q)] = h[(i, j)];
                }
                kkt[(p, p)] += delta;
                kkt[(p, k)] = T::one();
                kkt[(k, p)] = T::one();
                rhs[p] = -g[i];
            }
            if let Ok(sol) = lu_solve(&kkt, &rhs) {
                for (p, &i) in face.iter().enumerate() {
                    d[i] = sol[p];
                }
                dg = tangent_slope(&d);
                if dg < T::zero() {
                    break;
                }
            }
            delta *= T::lit(100.0);
        }
        if !(dg < T::zero()) {
            // projected gradient on the face
            d.iter_mut().for_each(|v| *v = T::zero());
            for &i in &face {
                d[i] = mean - g[i];
            }
            dg = tangent_slope(&d);
            if !(dg < T::zero()) {
                return Ok(SimplexMinimum { x, value: f, gap, iterations: iters });
            }
        }
        let mut alpha_max = T::infinity();
        let mut blocking = None;
        for &i in &face {
            if d[i] < T::zero() {
                let a = -x[i] / d[i];
                if a < alpha_max {
                    alpha_max = a;
                    blocking = Some(i);
                }
            }
        }
        if !(alpha_max > T::zero()) {
            // a freshly added coordinate would leave the simplex: take a
            // Frank–Wolfe step towards the best vertex instead
            let jmin = (0..n)
                .min_by(|&a, &b| g[a].partial_cmp(&g[b]).unwrap_or(std::cmp::Ordering::Equal))
                .unwrap_or(0);
            for i in 0..n {
                d[i] = -x[i];
            }
            d[jmin] += T::one();
            dg = dot(&d, &g);
            alpha_max = T::one();
            blocking = None;
        }
        let mut alpha = T::one().min(alpha_max);
        let mut moved = false;
        for _ in 0..60 {
            let mut xa: Vec<T> = x.iter().zip(&d).map(|(&xi, &di)| xi + alpha * di).collect();
            if alpha == alpha_max {
                if let Some(b) = blocking {
                    xa[b] = T::zero();
                }
            }
            xa.iter_mut().for_each(|v| *v = v.max(T::zero()));
            let (fa, ga, ha) = oracle(&xa);
            let decrease_ok = fa <= f + T::lit(1e-4) * alpha * dg;
            let roundoff_ok = fa <= f + T::lit(1e-14) * f.abs() && fw_gap(&xa, &ga) < gap;
            if fa.is_finite() && (decrease_ok || roundoff_ok) {
                x = xa;
                active = x.iter().map(|&v| v > T::zero()).collect();
                f = fa;
                g = ga;
                h = ha;
                moved = true;
                break;
            }
            alpha *= T::lit(0.5);
        }
        if !moved {
            let gap = fw_gap(&x, &g);
            if gap_scale * gap <= tol {
                return Ok(SimplexMinimum { x, value: f, gap, iterations: iters });
            }
            return Err(Error::InnerMaxIters { iterations: iters, residual: (gap_scale * gap).as_f64() });
        }
    }
    let gap = fw_gap(&x, &g);
    if gap_scale * gap <= tol {
        Ok(SimplexMinimum { x, value: f, gap, iterations: iters })
    } else {
        Err(Error::InnerMaxIters { iterations: iters, residual: (gap_scale * gap).as_f64() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lbfgs_shifted_quadratic() {
        let a = [1.0, -2.0, 3.5];
        let r = smooth_minimize(
            |x: &[f64]| {
                let d: Vec<f64> = x.iter().zip(&a).map(|(p, q)| p - q).collect();
                (0.5 * dot(&d, &d), d)
            },
            &[0.0; 3],
            1e-12,
            100,
        )
        .unwrap();
        for (x, y) in r.x.iter().zip(&a) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn lbfgs_cosh() {
        let r = smooth_minimize(
            |x: &[f64]| (x[0].exp() + (-x[0]).exp(), vec![x[0].exp() - (-x[0]).exp()]),
            &[3.0],
            1e-12,
            100,
        )
        .unwrap();
        assert!(r.x[0].abs() < 1e-10);
    }

    #[test]
    fn simplex_newton_finds_face_solution() {
        // min ½‖x − a‖² over the simplex with a outside it
        let a = [0.9, 0.6, -0.5];
        let r = minimize_on_simplex(
            |x: &[f64]| {
                let d: Vec<f64> = x.iter().zip(&a).map(|(p, q)| p - q).collect();
                (0.5 * dot(&d, &d), d, Matrix::identity(3))
            },
            &[1.0 / 3.0; 3],
            1.0,
            1e-13,
            100,
        )
        .unwrap();
        assert!((r.x[0] - 0.65).abs() < 1e-12);
        assert!((r.x[1] - 0.35).abs() < 1e-12);
        assert_eq!(r.x[2], 0.0);
    }
}
