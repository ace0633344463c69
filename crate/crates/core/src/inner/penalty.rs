//! Saddle subproblem of the Bregman augmented Lagrangian step. The primal
//! point minimizes the smoothed objective
//!
//! * entropy, `Ax ≤ b`:   `f(x) + (1/η) Σ_i y_i exp(η(Ax−b)_i)`
//! * Euclidean, `Ax ≤ b`: `f(x) + (1/2η) ‖[y + η(Ax−b)]₊‖²`
//! * Euclidean, `Ax = b`: `f(x) + yᵀ(Ax−b) + (η/2) ‖Ax−b‖²`
//!
//! and the multiplier follows in closed form from `∇h(y) + η(Ax−b)`.

use super::smooth::{newton_minimize, smooth_minimize, Minimum};
use crate::error::{Error, Result};
use crate::geometry::{BregmanGeometry, Kind, MirrorPoint};
use crate::linalg::{dot, norm2, Cholesky, Matrix};
use crate::problems::{ConstrainedProblem, LinearConstraint, Objective};
use crate::scalar::Scalar;

pub(crate) struct PenaltyStep<T> {
    pub x: Vec<T>,
    pub lambda: MirrorPoint<T>,
    pub residual: T,
    pub iterations: usize,
}

struct Penalty<'a, T> {
    problem: &'a ConstrainedProblem<T>,
    con: &'a LinearConstraint<T>,
    kind: Kind,
    equality: bool,
    u: &'a [T],
    eta: T,
    cap: T,
}

impl<T: Scalar> Penalty<'_, T> {
    /// Multiplier estimate `∇h*`-image of `u + η(Ax − b)` (unclamped for the
    /// Euclidean inequality case, clamped by the caller).
    fn shifted(&self, x: &[T]) -> Vec<T> {
        let r = self.problem.residual(x);
        self.u.iter().zip(&r).map(|(&ui, &ri)| ui + self.eta * ri).collect()
    }

    fn multipliers(&self, s: &[T]) -> Option<Vec<T>> {
        match (self.kind, self.equality) {
            (Kind::Entropy, _) => {
                let mut out = Vec::with_capacity(s.len());
                for &si in s {
                    let e = si - T::one();
                    if e > self.cap {
                        return None;
                    }
                    out.push(e.exp());
                }
                Some(out)
            }
            (Kind::Euclidean, false) => Some(s.iter().map(|&v| v.max(T::zero())).collect()),
            (Kind::Euclidean, true) => Some(s.to_vec()),
        }
    }

    fn value_grad(&self, x: &[T]) -> (T, Vec<T>, Vec<T>) {
        let f = self.problem.objective();
        let s = self.shifted(x);
        let Some(lam) = self.multipliers(&s) else {
            return (T::infinity(), vec![T::zero(); x.len()], Vec::new());
        };
        let pen = match (self.kind, self.equality) {
            (Kind::Entropy, _) => lam.iter().copied().sum::<T>() / self.eta,
            (Kind::Euclidean, false) => dot(&lam, &lam) / (T::lit(2.0) * self.eta),
            (Kind::Euclidean, true) => {
                // yᵀr + η/2‖r‖² = (‖s‖² − ‖y‖²)/(2η)
                (dot(&s, &s) - dot(self.u, self.u)) / (T::lit(2.0) * self.eta)
            }
        };
        let mut g = f.subgradient(x);
        let at = self.con.a.tr_mul_vec(&lam);
        g.iter_mut().zip(&at).for_each(|(gi, &ai)| *gi += ai);
        (f.value(x) + pen, g, lam)
    }

    fn hessian(&self, x: &[T], lam: &[T], s: &[T]) -> Option<Matrix<T>> {
        let mut h = self.problem.objective().hessian(x)?;
        let w: Vec<T> = match (self.kind, self.equality) {
            (Kind::Entropy, _) => lam.iter().map(|&l| self.eta * l).collect(),
            (Kind::Euclidean, false) => s
                .iter()
                .map(|&v| if v > T::zero() { self.eta } else { T::zero() })
                .collect(),
            (Kind::Euclidean, true) => vec![self.eta; s.len()],
        };
        h.add_scaled(&self.con.a.weighted_gram(&w), T::one());
        Some(h)
    }

    fn residual(&self, x: &[T], grad: &[T]) -> T {
        norm2(grad) / (T::one() + norm2(&self.problem.objective().subgradient(x)))
    }
}

pub(crate) fn penalty_step<T: Scalar>(
    problem: &ConstrainedProblem<T>,
    geometry: &BregmanGeometry<T>,
    center: &MirrorPoint<T>,
    eta: T,
    warm: &[T],
    tol: T,
    max_iters: usize,
    exp_cap: T,
) -> Result<PenaltyStep<T>> {
    let con = problem
        .constraint()
        .ok_or_else(|| Error::Unsupported("dual prox needs a linear constraint".into()))?;
    if matches!(problem.objective(), Objective::PiecewiseMax { .. }) {
        return Err(Error::Unsupported("piecewise-max objective with linear constraints".into()));
    }
    let pen = Penalty {
        problem,
        con,
        kind: geometry.kind(),
        equality: con.sense == crate::problems::Sense::Equality,
        u: &center.grad,
        eta,
        cap: exp_cap,
    };
    let oracle = |x: &[T]| {
        let (v, g, lam) = pen.value_grad(x);
        if !v.is_finite() {
            return (v, g, None);
        }
        let s = pen.shifted(x);
        let h = pen.hessian(x, &lam, &s);
        (v, g, h)
    };
    let exact_quadratic = pen.equality
        && pen.kind == Kind::Euclidean
        && matches!(problem.objective(), Objective::Quadratic { .. } | Objective::Linear { .. });
    let solved: Result<Minimum<T>> = if exact_quadratic {
        quadratic_equality_solve(&pen, warm.len())
    } else {
        newton_minimize(oracle, |x, g| pen.residual(x, g), warm, tol, max_iters)
    };
    let min = match solved {
        Ok(m) if m.grad_norm <= tol => m,
        _ => {
            let lb = smooth_minimize(
                |x: &[T]| {
                    let (v, g, _) = pen.value_grad(x);
                    (v, g)
                },
                warm,
                tol,
                max_iters,
            )?;
            let (_, g, _) = pen.value_grad(&lb.x);
            let r = pen.residual(&lb.x, &g);
            if r > tol {
                return Err(Error::InnerMaxIters { iterations: lb.iterations, residual: r.as_f64() });
            }
            Minimum { grad_norm: r, ..lb }
        }
    };
    let s = pen.shifted(&min.x);
    if pen.kind == Kind::Entropy {
        if let Some((i, &si)) = s
            .iter()
            .enumerate()
            .find(|(_, &v)| v - T::one() > exp_cap || !v.is_finite())
        {
            return Err(Error::DivergedMultiplier { index: i, exponent: (si - T::one()).as_f64() });
        }
    }
    let lambda = geometry.mirror_map(&s)?;
    Ok(PenaltyStep {
        x: min.x,
        lambda,
        residual: min.grad_norm,
        iterations: min.iterations,
    })
}

/// `(∇²f + ηAᵀA) x = −c − Aᵀy + ηAᵀb` solved directly.
fn quadratic_equality_solve<T: Scalar>(pen: &Penalty<'_, T>, n: usize) -> Result<Minimum<T>> {
    let (h0, c) = match pen.problem.objective() {
        Objective::Quadratic { w, c, .. } => (w.clone(), c.clone()),
        Objective::Linear { c } => (Matrix::zeros(n, n), c.clone()),
        _ => unreachable!(),
    };
    let mut h = h0;
    h.add_scaled(&pen.con.a.gram(), pen.eta);
    let shifted: Vec<T> = pen
        .u
        .iter()
        .zip(&pen.con.b)
        .map(|(&y, &b)| y - pen.eta * b)
        .collect();
    let at = pen.con.a.tr_mul_vec(&shifted);
    let rhs: Vec<T> = c.iter().zip(&at).map(|(&ci, &ai)| -(ci + ai)).collect();
    let ch = Cholesky::factor(&h, T::lit(1e-14))?;
    let mut x = ch.solve(&rhs);
    // one step of iterative refinement
    let (_, g, _) = pen.value_grad(&x);
    let corr = ch.solve(&g);
    x.iter_mut().zip(&corr).for_each(|(xi, &ci)| *xi -= ci);
    let (value, g, _) = pen.value_grad(&x);
    Ok(Minimum { grad_norm: pen.residual(&x, &g), x, value, iterations: 1 })
}
