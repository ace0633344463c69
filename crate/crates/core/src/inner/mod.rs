//! Per-iteration subproblems: the Bregman proximal step on the primal for
//! unconstrained problems and the augmented Lagrangian saddle step for
//! linearly constrained ones.

mod penalty;
mod simplex;
mod smooth;

pub use smooth::{minimize_on_simplex, newton_minimize, smooth_minimize, Minimum, SimplexMinimum};

use crate::error::{check_dim, Error, Result};
use crate::geometry::{BregmanGeometry, Domain, Kind, MirrorPoint};
use crate::linalg::{dot, norm2, Cholesky};
use crate::problems::{ConstrainedProblem, FeasibleSet, Objective, Sense};
use crate::scalar::Scalar;

pub const DEFAULT_INNER_TOL: f64 = 1e-10;
pub const DEFAULT_INNER_MAX_ITERS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProxMode {
    /// Prox of `f` itself over `X`; the iterate is the primal point.
    DirectProx,
    /// Saddle step of the augmented Lagrangian; the iterate is the multiplier.
    DualProx,
}

#[derive(Debug, Clone)]
pub struct ProxEnvironment<'a, T> {
    problem: &'a ConstrainedProblem<T>,
    geometry: &'a BregmanGeometry<T>,
    mode: ProxMode,
    inner_tol: T,
    inner_max_iters: usize,
}

#[derive(Debug, Clone)]
pub struct ProxResult<T> {
    /// `λ_{k+1}` (dual mode) or the prox point (direct mode), with mirror coordinates.
    pub point: MirrorPoint<T>,
    /// Primal minimizer `x_{k+1}`; only in dual mode.
    pub x: Option<Vec<T>>,
    /// `d(point)` in the maximization convention: `−f` for direct mode,
    /// `L(x_{k+1}, λ_{k+1})` for dual mode.
    pub dual_value: T,
    pub residual: T,
    pub inner_iterations: usize,
}

impl<'a, T: Scalar> ProxEnvironment<'a, T> {
    pub fn new(problem: &'a ConstrainedProblem<T>, geometry: &'a BregmanGeometry<T>, mode: ProxMode) -> Result<Self> {
        match mode {
            ProxMode::DirectProx => {
                if problem.constraint().is_some() {
                    return Err(Error::InvalidParameter("direct prox on a constrained problem".into()));
                }
                check_dim(problem.dim(), geometry.dim())?;
                let ok = matches!(
                    (problem.feasible_set(), geometry.kind(), geometry.domain()),
                    (FeasibleSet::Simplex, Kind::Entropy, Domain::Simplex(_))
                        | (FeasibleSet::FreeSpace, Kind::Euclidean, Domain::FullSpace(_))
                );
                if !ok {
                    return Err(Error::InvalidParameter(
                        "direct prox needs entropy over the simplex or Euclidean over free space".into(),
                    ));
                }
                if problem.feasible_set() == FeasibleSet::FreeSpace
                    && matches!(problem.objective(), Objective::PiecewiseMax { .. })
                {
                    return Err(Error::Unsupported("piecewise-max prox over free space".into()));
                }
            }
            ProxMode::DualProx => {
                let Some(con) = problem.constraint() else {
                    return Err(Error::InvalidParameter("dual prox needs a linear constraint".into()));
                };
                if problem.feasible_set() != FeasibleSet::FreeSpace {
                    return Err(Error::Unsupported("dual prox with a restricted primal set".into()));
                }
                if matches!(problem.objective(), Objective::PiecewiseMax { .. }) {
                    return Err(Error::Unsupported("piecewise-max objective with linear constraints".into()));
                }
                check_dim(problem.constraint_dim(), geometry.dim())?;
                let ok = matches!(
                    (con.sense, geometry.domain()),
                    (Sense::Equality, Domain::FullSpace(_)) | (Sense::Inequality, Domain::NonnegativeOrthant(_))
                );
                if !ok {
                    return Err(Error::InvalidParameter(
                        "multiplier domain must be free space for equalities and the orthant for inequalities".into(),
                    ));
                }
            }
        }
        Ok(ProxEnvironment {
            problem,
            geometry,
            mode,
            inner_tol: T::lit(DEFAULT_INNER_TOL),
            inner_max_iters: DEFAULT_INNER_MAX_ITERS,
        })
    }

    pub fn with_inner_tol(mut self, tol: T) -> Result<Self> {
        if !(tol > T::zero()) {
            return Err(Error::InvalidParameter("inner tolerance must be positive".into()));
        }
        self.inner_tol = tol;
        Ok(self)
    }

    pub fn with_inner_max_iters(mut self, iters: usize) -> Self {
        self.inner_max_iters = iters.max(1);
        self
    }

    pub fn problem(&self) -> &'a ConstrainedProblem<T> {
        self.problem
    }

    pub fn geometry(&self) -> &'a BregmanGeometry<T> {
        self.geometry
    }

    pub fn mode(&self) -> ProxMode {
        self.mode
    }

    pub fn inner_tol(&self) -> T {
        self.inner_tol
    }

    pub fn inner_max_iters(&self) -> usize {
        self.inner_max_iters
    }

    /// `d(λ)` where it has a closed form: `−f(λ)` in direct mode.
    pub fn dual_value_at(&self, point: &[T]) -> Option<T> {
        match self.mode {
            ProxMode::DirectProx => Some(-self.problem.value(point)),
            ProxMode::DualProx => None,
        }
    }

    pub fn prox_step(&self, center: &[T], eta: T) -> Result<ProxResult<T>> {
        let c = self.geometry.mirror_point(center)?;
        self.prox_step_mirror(&c, eta, None)
    }

    /// Prox step from a centre given in mirror coordinates. `warm` seeds the
    /// primal inner solve in dual mode.
    pub fn prox_step_mirror(&self, center: &MirrorPoint<T>, eta: T, warm: Option<&[T]>) -> Result<ProxResult<T>> {
        if !(eta > T::zero()) || !eta.is_finite() {
            return Err(Error::InvalidParameter(format!("step size must be positive, got {eta}")));
        }
        check_dim(self.geometry.dim(), center.dim())?;
        let tol = self.inner_tol;
        match self.mode {
            ProxMode::DirectProx => {
                let (point, residual, iterations, floor) = match self.geometry.kind() {
                    Kind::Entropy => {
                        let s = simplex::entropic_prox(
                            self.problem.objective(),
                            self.geometry,
                            center,
                            eta,
                            tol,
                            self.inner_max_iters,
                        )?;
                        (s.point, s.residual, s.iterations, T::zero())
                    }
                    Kind::Euclidean => self.euclidean_prox(&center.point, eta)?,
                };
                if residual > tol.max(floor) {
                    return Err(Error::InnerMaxIters { iterations, residual: residual.as_f64() });
                }
                let dual_value = -self.problem.value(&point.point);
                Ok(ProxResult { point, x: None, dual_value, residual, inner_iterations: iterations })
            }
            ProxMode::DualProx => {
                let zeros;
                let warm = match warm {
                    Some(w) => w,
                    None => {
                        zeros = vec![T::zero(); self.problem.dim()];
                        &zeros
                    }
                };
                check_dim(self.problem.dim(), warm.len())?;
                let s = penalty::penalty_step(
                    self.problem,
                    self.geometry,
                    center,
                    eta,
                    warm,
                    tol,
                    self.inner_max_iters,
                    self.geometry.exp_cap(),
                )?;
                let dual_value = self.problem.lagrangian(&s.x, &s.lambda.point);
                Ok(ProxResult {
                    point: s.lambda,
                    x: Some(s.x),
                    dual_value,
                    residual: s.residual,
                    inner_iterations: s.iterations,
                })
            }
        }
    }

    /// `argmin_x f(x) + ‖x − c‖²/(2η)` over free space. Also returns the
    /// round-off level of the residual `‖η∇f(x) + x − c‖`, which exceeds any
    /// fixed tolerance once `η` is large.
    fn euclidean_prox(&self, c: &[T], eta: T) -> Result<(MirrorPoint<T>, T, usize, T)> {
        let f = self.problem.objective();
        let inv = T::one() / eta;
        let (x, iterations) = match f {
            Objective::Linear { c: lin } => (c.iter().zip(lin).map(|(&ci, &li)| ci - eta * li).collect(), 0),
            Objective::Quadratic { w, c: lin, .. } => {
                let mut h = w.clone();
                h.add_diagonal(inv);
                let rhs: Vec<T> = c.iter().zip(lin).map(|(&ci, &li)| ci * inv - li).collect();
                (Cholesky::factor(&h, T::lit(1e-15))?.solve(&rhs), 1)
            }
            Objective::LogSumExp { .. } => {
                let m = newton_minimize(
                    |x: &[T]| {
                        let d: Vec<T> = x.iter().zip(c).map(|(&a, &b)| a - b).collect();
                        let v = f.value(x) + T::lit(0.5) * inv * d.iter().map(|&v| v * v).sum::<T>();
                        let mut g = f.subgradient(x);
                        g.iter_mut().zip(&d).for_each(|(gi, &di)| *gi += inv * di);
                        let h = f.hessian(x).map(|mut h| {
                            h.add_diagonal(inv);
                            h
                        });
                        (v, g, h)
                    },
                    |_, g| eta * norm2(g),
                    c,
                    self.inner_tol,
                    self.inner_max_iters,
                )?;
                (m.x, m.iterations)
            }
            Objective::PiecewiseMax { .. } => {
                return Err(Error::Unsupported("piecewise-max prox over free space".into()))
            }
        };
        let mut g = f.subgradient(&x);
        g.iter_mut()
            .zip(x.iter().zip(c))
            .for_each(|(gi, (&xi, &ci))| *gi += inv * (xi - ci));
        let residual = eta * norm2(&g);
        let terms = eta * gradient_magnitude(f, &x) + norm2(&x) + norm2(c);
        let floor = T::lit(8.0) * T::epsilon() * T::from_usize_lossy(x.len()).sqrt() * terms;
        Ok((self.geometry.mirror_map(&x)?, residual, iterations, floor))
    }
}

/// Size of the terms summed when evaluating `∇f(x)`.
fn gradient_magnitude<T: Scalar>(f: &Objective<T>, x: &[T]) -> T {
    match f {
        Objective::Linear { c } => norm2(c),
        Objective::Quadratic { w, c, .. } => {
            let n = x.len();
            let wx: Vec<T> = (0..n).map(|i| (0..n).map(|j| (w[(i, j)] * x[j]).abs()).sum()).collect();
            norm2(&wx) + norm2(c)
        }
        Objective::PiecewiseMax { rows } => (0..rows.rows()).fold(T::zero(), |m, j| m.max(norm2(rows.row(j)))),
        Objective::LogSumExp { rows } => (0..rows.rows()).map(|j| norm2(rows.row(j)) * dot(rows.row(j), x).exp()).sum(),
    }
}

/// Entropic prox on the simplex, `argmin_{x ∈ Δ_n} f(x) + KL(x, center)/η`,
/// solved until `η ·` prox-gap is at most `tol`.
pub fn simplex_prox_solve<T: Scalar>(problem: &ConstrainedProblem<T>, center: &[T], eta: T, tol: T) -> Result<Vec<T>> {
    let g = BregmanGeometry::entropy(Domain::Simplex(problem.dim()))?;
    let env = ProxEnvironment::new(problem, &g, ProxMode::DirectProx)?.with_inner_tol(tol)?;
    Ok(env.prox_step(center, eta)?.point.point)
}
