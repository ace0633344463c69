//! Benchmark instances: objectives, constraints, seeded generators and
//! reference (KKT) solutions.

mod generators;
mod io;
mod lp;
mod reference;

pub use generators::{
    make_counterexample_lp, make_log_sum_exp, make_mdp_lp, make_piecewise_max, make_random_qp,
    mdp_lp_from_model, DEFAULT_DISCOUNT,
};
pub use io::{read_instance, write_instance};
pub use lp::{solve_matrix_game, GameSolution};
pub use reference::{compute_reference, verify_reference, ReferenceSolution, DEFAULT_FEASTOL};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{dot, positive_part, norm2, Matrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub enum Objective<T> {
    /// `cᵀx`
    Linear { c: Vec<T> },
    /// `½xᵀWx + cᵀx + constant`
    Quadratic { w: Matrix<T>, c: Vec<T>, constant: T },
    /// `max_j c_jᵀx`, rows of the matrix are the `c_j`.
    PiecewiseMax { rows: Matrix<T> },
    /// `Σ_j exp(a_jᵀx)`
    LogSumExp { rows: Matrix<T> },
}

impl<T: Scalar> Objective<T> {
    pub fn dim(&self) -> usize {
        match self {
            Objective::Linear { c } => c.len(),
            Objective::Quadratic { c, .. } => c.len(),
            Objective::PiecewiseMax { rows } | Objective::LogSumExp { rows } => rows.cols(),
        }
    }

    pub fn is_smooth(&self) -> bool {
        !matches!(self, Objective::PiecewiseMax { .. })
    }

    pub fn value(&self, x: &[T]) -> T {
        match self {
            Objective::Linear { c } => dot(c, x),
            Objective::Quadratic { w, c, constant } => {
                T::lit(0.5) * dot(x, &w.mul_vec(x)) + dot(c, x) + *constant
            }
            Objective::PiecewiseMax { rows } => rows
                .mul_vec(x)
                .into_iter()
                .fold(T::neg_infinity(), T::max),
            Objective::LogSumExp { rows } => rows.mul_vec(x).into_iter().map(T::exp).sum(),
        }
    }

    /// One element of `∂f(x)`; for the piecewise max the row of the smallest
    /// maximizing index.
    pub fn subgradient(&self, x: &[T]) -> Vec<T> {
        match self {
            Objective::Linear { c } => c.clone(),
            Objective::Quadratic { w, c, .. } => {
                let mut g = w.mul_vec(x);
                g.iter_mut().zip(c).for_each(|(gi, &ci)| *gi += ci);
                g
            }
            Objective::PiecewiseMax { rows } => {
                let vals = rows.mul_vec(x);
                let mut best = 0;
                for (j, &v) in vals.iter().enumerate() {
                    if v > vals[best] {
                        best = j;
                    }
                }
                rows.row(best).to_vec()
            }
            Objective::LogSumExp { rows } => {
                let e: Vec<T> = rows.mul_vec(x).into_iter().map(T::exp).collect();
                rows.tr_mul_vec(&e)
            }
        }
    }

    /// Hessian for the smooth kinds.
    pub fn hessian(&self, x: &[T]) -> Option<Matrix<T>> {
        match self {
            Objective::Linear { c } => Some(Matrix::zeros(c.len(), c.len())),
            Objective::Quadratic { w, .. } => Some(w.clone()),
            Objective::PiecewiseMax { .. } => None,
            Objective::LogSumExp { rows } => {
                let e: Vec<T> = rows.mul_vec(x).into_iter().map(T::exp).collect();
                Some(rows.weighted_gram(&e))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeasibleSet {
    FreeSpace,
    Simplex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Equality,
    Inequality,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint<T> {
    pub a: Matrix<T>,
    pub b: Vec<T>,
    pub sense: Sense,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProblemKind {
    PiecewiseMax,
    LogSumExp,
    MdpLp { states: usize, actions: usize, discount: f64 },
    RandomQp,
    Counterexample,
    Custom,
}

impl ProblemKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemKind::PiecewiseMax => "pmax",
            ProblemKind::LogSumExp => "lse",
            ProblemKind::MdpLp { .. } => "mdp",
            ProblemKind::RandomQp => "qp",
            ProblemKind::Counterexample => "counterexample",
            ProblemKind::Custom => "custom",
        }
    }
}

/// `min_{x ∈ X} f(x)` optionally subject to `Ax = b` or `Ax ≤ b`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedProblem<T> {
    kind: ProblemKind,
    seed: u64,
    objective: Objective<T>,
    feasible_set: FeasibleSet,
    constraint: Option<LinearConstraint<T>>,
}

impl<T: Scalar> ConstrainedProblem<T> {
    pub fn new(
        objective: Objective<T>,
        feasible_set: FeasibleSet,
        constraint: Option<LinearConstraint<T>>,
    ) -> Result<Self> {
        let n = objective.dim();
        if n == 0 {
            return Err(Error::InvalidParameter("objective has dimension 0".into()));
        }
        if let Objective::Quadratic { w, .. } = &objective {
            check_dim(n, w.rows())?;
            check_dim(n, w.cols())?;
        }
        if let Some(con) = &constraint {
            check_dim(n, con.a.cols())?;
            check_dim(con.a.rows(), con.b.len())?;
            if feasible_set == FeasibleSet::Simplex {
                return Err(Error::Unsupported(
                    "linear constraints on top of the simplex".into(),
                ));
            }
        }
        Ok(Self {
            kind: ProblemKind::Custom,
            seed: 0,
            objective,
            feasible_set,
            constraint,
        })
    }

    pub(crate) fn tagged(mut self, kind: ProblemKind, seed: u64) -> Self {
        self.kind = kind;
        self.seed = seed;
        self
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn objective(&self) -> &Objective<T> {
        &self.objective
    }

    pub fn feasible_set(&self) -> FeasibleSet {
        self.feasible_set
    }

    pub fn constraint(&self) -> Option<&LinearConstraint<T>> {
        self.constraint.as_ref()
    }

    /// Primal dimension `n`.
    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    /// Number of linear constraints `m` (0 when unconstrained).
    pub fn constraint_dim(&self) -> usize {
        self.constraint.as_ref().map_or(0, |c| c.a.rows())
    }

    pub fn value(&self, x: &[T]) -> T {
        self.objective.value(x)
    }

    /// `Ax − b`
    pub fn residual(&self, x: &[T]) -> Vec<T> {
        match &self.constraint {
            Some(con) => {
                let mut r = con.a.mul_vec(x);
                r.iter_mut().zip(&con.b).for_each(|(ri, &bi)| *ri -= bi);
                r
            }
            None => Vec::new(),
        }
    }

    /// `‖Ax − b‖` for equalities, `‖[Ax − b]₊‖` for inequalities.
    pub fn feasibility(&self, x: &[T]) -> T {
        match &self.constraint {
            Some(con) => {
                let r = self.residual(x);
                match con.sense {
                    Sense::Equality => norm2(&r),
                    Sense::Inequality => norm2(&positive_part(&r)),
                }
            }
            None => T::zero(),
        }
    }

    /// `L(x, λ) = f(x) + λᵀ(Ax − b)`
    pub fn lagrangian(&self, x: &[T], lambda: &[T]) -> T {
        self.value(x) + dot(lambda, &self.residual(x))
    }
}
