//! High-accuracy reference solutions `(x*, λ*)` with a KKT certificate.

use super::lp::solve_matrix_game;
use super::{ConstrainedProblem, FeasibleSet, Objective, ProblemKind, Sense};
use crate::error::{Error, Result};
use crate::geometry::{BregmanGeometry, Domain};
use crate::inner::{minimize_on_simplex, newton_minimize, ProxEnvironment, ProxMode};
use crate::linalg::{dot, lu_solve, norm2, norm_inf, Cholesky, Matrix};
use crate::scalar::Scalar;

pub const DEFAULT_FEASTOL: f64 = 1e-9;

const ALM_STEP: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution<T> {
    pub x_star: Vec<T>,
    /// Empty when the problem has no linear constraint.
    pub lambda_star: Vec<T>,
    pub f_star: T,
    /// `2‖λ*‖ + 1`
    pub rho_star: T,
    /// Optimal mixed strategy of the maximizing player for piecewise-max
    /// problems; empty otherwise.
    pub certificate: Vec<T>,
    pub kkt_residual: T,
}

impl<T: Scalar> ReferenceSolution<T> {
    fn assemble(problem: &ConstrainedProblem<T>, x_star: Vec<T>, lambda_star: Vec<T>, certificate: Vec<T>) -> Self {
        let f_star = problem.value(&x_star);
        let rho_star = T::lit(2.0) * norm2(&lambda_star) + T::one();
        let mut r = ReferenceSolution { x_star, lambda_star, f_star, rho_star, certificate, kkt_residual: T::zero() };
        r.kkt_residual = kkt_residual(problem, &r);
        r
    }
}

/// Computes `(x*, λ*)`: closed form for the equality-constrained linear and
/// quadratic cases, value iteration for MDP programs, an exact matrix-game
/// solve for piecewise max on the simplex, a Newton active-set solve for
/// smooth objectives on the simplex, and `budget` iterations of classical
/// augmented Lagrangian (`η = 10`) for the remaining inequality problems.
/// The result is verified at [`DEFAULT_FEASTOL`].
pub fn compute_reference<T: Scalar>(problem: &ConstrainedProblem<T>, budget: usize) -> Result<ReferenceSolution<T>> {
    let feastol = T::lit(DEFAULT_FEASTOL);
    let r = match (problem.feasible_set(), problem.constraint()) {
        (FeasibleSet::Simplex, _) => simplex_reference(problem, budget)?,
        (FeasibleSet::FreeSpace, None) => unconstrained_reference(problem, budget)?,
        (FeasibleSet::FreeSpace, Some(con)) => match (con.sense, problem.kind()) {
            (Sense::Equality, _) => equality_reference(problem)?,
            (Sense::Inequality, ProblemKind::MdpLp { states, actions, .. }) => {
                mdp_reference(problem, states, actions, budget)?
            }
            (Sense::Inequality, _) => alm_reference(problem, budget, feastol)?,
        },
    };
    verify_reference(problem, &r, feastol)?;
    Ok(r)
}

/// Checks primal feasibility, dual feasibility, complementarity and
/// stationarity (or the optimality gap on the simplex) of `r` against
/// `feastol`; returns the largest residual.
pub fn verify_reference<T: Scalar>(problem: &ConstrainedProblem<T>, r: &ReferenceSolution<T>, feastol: T) -> Result<T> {
    let res = kkt_residual(problem, r);
    if res <= feastol {
        Ok(res)
    } else {
        Err(Error::ReferenceUnavailable { residual: res.as_f64() })
    }
}

fn kkt_residual<T: Scalar>(problem: &ConstrainedProblem<T>, r: &ReferenceSolution<T>) -> T {
    let x = &r.x_star;
    let f = problem.objective();
    if problem.feasible_set() == FeasibleSet::Simplex {
        let sum: T = x.iter().copied().sum();
        let simplex_violation = (sum - T::one()).abs().max(x.iter().fold(T::zero(), |m, &v| m.max(-v)));
        let gap = match f {
            Objective::PiecewiseMax { rows } if !r.certificate.is_empty() => {
                // duality gap of the matrix game
                let best = rows.tr_mul_vec(&r.certificate).into_iter().fold(T::infinity(), T::min);
                f.value(x) - best
            }
            _ => frank_wolfe_gap(&f.subgradient(x), x),
        };
        return simplex_violation.max(gap.abs());
    }
    let mut g = f.subgradient(x);
    let Some(con) = problem.constraint() else {
        return norm2(&g) / (T::one() + norm_inf(&g));
    };
    let lam = &r.lambda_star;
    let at = con.a.tr_mul_vec(lam);
    g.iter_mut().zip(&at).for_each(|(gi, &ai)| *gi += ai);
    let scale = T::one() + norm_inf(&f.subgradient(x)).max(norm_inf(&at));
    let stationarity = norm2(&g) / scale;
    let feasibility = problem.feasibility(x);
    let res = problem.residual(x);
    let (dual, comp) = match con.sense {
        Sense::Equality => (T::zero(), T::zero()),
        Sense::Inequality => (
            lam.iter().fold(T::zero(), |m, &l| m.max(-l)),
            lam.iter().zip(&res).fold(T::zero(), |m, (&l, &ri)| m.max((l * ri).abs())),
        ),
    };
    stationarity.max(feasibility).max(dual).max(comp)
}

fn frank_wolfe_gap<T: Scalar>(g: &[T], x: &[T]) -> T {
    dot(g, x) - g.iter().copied().fold(T::infinity(), T::min)
}

fn simplex_reference<T: Scalar>(problem: &ConstrainedProblem<T>, budget: usize) -> Result<ReferenceSolution<T>> {
    let n = problem.dim();
    let f = problem.objective();
    if let Objective::PiecewiseMax { rows } = f {
        let game = solve_matrix_game(rows)?;
        return Ok(ReferenceSolution::assemble(problem, game.x, Vec::new(), game.w));
    }
    let x0 = vec![T::one() / T::from_usize_lossy(n); n];
    let sol = minimize_on_simplex(
        |x: &[T]| {
            let h = f.hessian(x).unwrap_or_else(|| Matrix::zeros(n, n));
            (f.value(x), f.subgradient(x), h)
        },
        &x0,
        T::one(),
        T::lit(1e-13),
        budget.max(100),
    )?;
    Ok(ReferenceSolution::assemble(problem, sol.x, Vec::new(), Vec::new()))
}

fn unconstrained_reference<T: Scalar>(problem: &ConstrainedProblem<T>, budget: usize) -> Result<ReferenceSolution<T>> {
    let f = problem.objective();
    let n = problem.dim();
    let x = match f {
        Objective::Quadratic { w, c, .. } => {
            let rhs: Vec<T> = c.iter().map(|&v| -v).collect();
            Cholesky::factor(w, T::lit(1e-14))?.solve(&rhs)
        }
        Objective::LogSumExp { .. } => {
            newton_minimize(
                |x: &[T]| (f.value(x), f.subgradient(x), f.hessian(x)),
                |_, g| norm2(g),
                &vec![T::zero(); n],
                T::lit(1e-12),
                budget.max(100),
            )?
            .x
        }
        _ => return Err(Error::Unsupported("unconstrained problem without a minimizer".into())),
    };
    Ok(ReferenceSolution::assemble(problem, x, Vec::new(), Vec::new()))
}

/// `x* = argmin f` on `{Ax = b}` for linear or quadratic `f`. With a full
/// column rank `A`, `x*` solves the normal equations and `λ*` is the
/// minimum-norm multiplier `−A(AᵀA)⁻¹(Wx* + c)`; otherwise the KKT system
/// is solved directly.
fn equality_reference<T: Scalar>(problem: &ConstrainedProblem<T>) -> Result<ReferenceSolution<T>> {
    let con = problem.constraint().expect("constrained");
    let (m, n) = (con.a.rows(), con.a.cols());
    let (w, c) = match problem.objective() {
        Objective::Linear { c } => (Matrix::zeros(n, n), c.clone()),
        Objective::Quadratic { w, c, .. } => (w.clone(), c.clone()),
        _ => return Err(Error::Unsupported("equality reference needs a linear or quadratic objective".into())),
    };
    if m >= n {
        if let Ok(ch) = Cholesky::factor(&con.a.gram(), T::lit(1e-12)) {
            let x = ch.solve(&con.a.tr_mul_vec(&con.b));
            let mut g = w.mul_vec(&x);
            g.iter_mut().zip(&c).for_each(|(gi, &ci)| *gi += ci);
            let lam: Vec<T> = con.a.mul_vec(&ch.solve(&g)).into_iter().map(|v| -v).collect();
            return Ok(ReferenceSolution::assemble(problem, x, lam, Vec::new()));
        }
    }
    let k = Matrix::from_fn(n + m, n + m, |i, j| match (i < n, j < n) {
        (true, true) => w[(i, j)],
        (true, false) => con.a[(j - n, i)],
        (false, true) => con.a[(i - n, j)],
        (false, false) => T::zero(),
    });
    let rhs: Vec<T> = c.iter().map(|&v| -v).chain(con.b.iter().copied()).collect();
    let sol = lu_solve(&k, &rhs)?;
    Ok(ReferenceSolution::assemble(problem, sol[..n].to_vec(), sol[n..].to_vec(), Vec::new()))
}

/// Value iteration to `1e-12`, then exact evaluation of the greedy policy:
/// `(I − γP_π)V = r_π` and `λ_{s,π(s)} = μ_s` with `(I − γP_π)ᵀμ = 1`.
fn mdp_reference<T: Scalar>(
    problem: &ConstrainedProblem<T>,
    states: usize,
    actions: usize,
    budget: usize,
) -> Result<ReferenceSolution<T>> {
    let con = problem.constraint().expect("constrained");
    // row (s,a) of A is γP(·|s,a) − e_s and b = −r
    let q = |v: &[T], s: usize, a: usize| {
        let row = s * actions + a;
        dot(con.a.row(row), v) + v[s] - con.b[row]
    };
    let mut v = vec![T::zero(); states];
    let mut policy = vec![0usize; states];
    let tol = T::lit(1e-12);
    for _ in 0..budget.max(10_000) {
        let mut next = vec![T::zero(); states];
        for s in 0..states {
            let (mut best, mut arg) = (T::neg_infinity(), 0);
            for a in 0..actions {
                let val = q(&v, s, a);
                if val > best {
                    best = val;
                    arg = a;
                }
            }
            next[s] = best;
            policy[s] = arg;
        }
        let diff = next.iter().zip(&v).fold(T::zero(), |m, (&x, &y)| m.max((x - y).abs()));
        v = next;
        if diff <= tol {
            break;
        }
    }
    // I − γP_π has rows −(A row) restricted to the chosen actions
    let mut sys = Matrix::zeros(states, states);
    let mut rhs = vec![T::zero(); states];
    for s in 0..states {
        let row = s * actions + policy[s];
        for sp in 0..states {
            sys[(s, sp)] = -con.a[(row, sp)];
        }
        rhs[s] = -con.b[row];
    }
    let v = lu_solve(&sys, &rhs)?;
    let mu = lu_solve(&sys.transpose(), &vec![T::one(); states])?;
    let mut lam = vec![T::zero(); states * actions];
    for s in 0..states {
        lam[s * actions + policy[s]] = mu[s];
    }
    Ok(ReferenceSolution::assemble(problem, v, lam, Vec::new()))
}

/// Classical augmented Lagrangian with a constant step; stops once the KKT
/// residual falls two orders below `feastol`.
fn alm_reference<T: Scalar>(problem: &ConstrainedProblem<T>, budget: usize, feastol: T) -> Result<ReferenceSolution<T>> {
    let m = problem.constraint_dim();
    let geometry = BregmanGeometry::euclidean(Domain::NonnegativeOrthant(m));
    let env = ProxEnvironment::new(problem, &geometry, ProxMode::DualProx)?.with_inner_tol(T::lit(1e-13))?;
    let eta = T::lit(ALM_STEP);
    let mut center = geometry.mirror_point(&vec![T::zero(); m])?;
    let mut x = vec![T::zero(); problem.dim()];
    let mut best: Option<ReferenceSolution<T>> = None;
    for _ in 0..budget.max(1) {
        let step = env.prox_step_mirror(&center, eta, Some(&x))?;
        x = step.x.expect("dual prox returns x");
        center = step.point;
        let cand = ReferenceSolution::assemble(problem, x.clone(), center.point.clone(), Vec::new());
        let done = cand.kkt_residual <= feastol * T::lit(1e-2);
        if best.as_ref().is_none_or(|b| cand.kkt_residual < b.kkt_residual) {
            best = Some(cand);
        }
        if done {
            break;
        }
    }
    Ok(best.expect("at least one iteration"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{mdp_lp_from_model, LinearConstraint};

    #[test]
    fn counterexample_two_by_one() {
        let p: ConstrainedProblem<f64> = ConstrainedProblem::new(
            Objective::Linear { c: vec![1.0] },
            FeasibleSet::FreeSpace,
            Some(LinearConstraint {
                a: Matrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap(),
                b: vec![1.0, 1.0],
                sense: Sense::Equality,
            }),
        )
        .unwrap();
        let r = compute_reference(&p, 10).unwrap();
        assert!((r.x_star[0] - 1.0).abs() < 1e-15);
        assert!((r.lambda_star[0] + 0.5).abs() < 1e-15 && (r.lambda_star[1] + 0.5).abs() < 1e-15);
        assert!((r.f_star - 1.0).abs() < 1e-15);
    }

    #[test]
    fn one_state_mdp() {
        let p: ConstrainedProblem<f64> = mdp_lp_from_model(&[vec![vec![1.0]]], &[vec![0.5]], 0.9).unwrap();
        let r = compute_reference(&p, 100).unwrap();
        assert!((r.f_star - 5.0).abs() < 1e-12);
        assert!((r.lambda_star[0] - 10.0).abs() < 1e-10);
    }

    #[test]
    fn quadratic_equality_toy() {
        let p: ConstrainedProblem<f64> = ConstrainedProblem::new(
            Objective::Quadratic { w: Matrix::identity(1), c: vec![0.0], constant: 0.0 },
            FeasibleSet::FreeSpace,
            Some(LinearConstraint { a: Matrix::identity(1), b: vec![1.0], sense: Sense::Equality }),
        )
        .unwrap();
        let r = compute_reference(&p, 10).unwrap();
        assert!((r.lambda_star[0] + 1.0).abs() < 1e-15);
        assert!((r.rho_star - 3.0).abs() < 1e-15);
    }

    #[test]
    fn inequality_toy_by_alm() {
        // min x s.t. −x ≤ 0
        let p: ConstrainedProblem<f64> = ConstrainedProblem::new(
            Objective::Linear { c: vec![1.0] },
            FeasibleSet::FreeSpace,
            Some(LinearConstraint { a: Matrix::identity(1).scaled(-1.0), b: vec![0.0], sense: Sense::Inequality }),
        )
        .unwrap();
        let r = compute_reference(&p, 200).unwrap();
        assert!(r.x_star[0].abs() < 1e-9);
        assert!((r.lambda_star[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn corrupted_reference_is_rejected() {
        let p: ConstrainedProblem<f64> = mdp_lp_from_model(&[vec![vec![1.0]]], &[vec![0.5]], 0.9).unwrap();
        let mut r = compute_reference(&p, 100).unwrap();
        r.x_star[0] -= 1e-3;
        assert!(matches!(verify_reference(&p, &r, 1e-9), Err(Error::ReferenceUnavailable { .. })));
    }
}
