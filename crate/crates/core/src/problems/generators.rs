use super::{ConstrainedProblem, FeasibleSet, LinearConstraint, Objective, ProblemKind, Sense};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{Cholesky, Matrix};
use crate::rng::{stream, SeededStream};
use crate::scalar::Scalar;

pub const DEFAULT_DISCOUNT: f64 = 0.9;
const MAX_RESAMPLES: usize = 100;

fn uniform_matrix<T: Scalar>(rows: usize, cols: usize, lo: f64, hi: f64, rng: &mut SeededStream) -> Matrix<T> {
    Matrix::from_fn(rows, cols, |_, _| rng.uniform(lo, hi))
}

fn check_positive(m: usize, n: usize) -> Result<()> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidParameter(format!("dimensions must be positive, got m={m} n={n}")));
    }
    Ok(())
}

/// `min_{x ∈ Δ_n} max_j c_jᵀx` with `c_j ~ U[−1,1]ⁿ`.
pub fn make_piecewise_max<T: Scalar>(m: usize, n: usize, seed: u64) -> Result<ConstrainedProblem<T>> {
    check_positive(m, n)?;
    let mut rng = SeededStream::new(seed, stream::PIECES);
    let rows = uniform_matrix(m, n, -1.0, 1.0, &mut rng);
    Ok(ConstrainedProblem::new(Objective::PiecewiseMax { rows }, FeasibleSet::Simplex, None)?
        .tagged(ProblemKind::PiecewiseMax, seed))
}

/// `min_{x ∈ Δ_n} Σ_j exp(a_jᵀx)` with `a_j ~ U[−1,1]ⁿ`.
pub fn make_log_sum_exp<T: Scalar>(m: usize, n: usize, seed: u64) -> Result<ConstrainedProblem<T>> {
    check_positive(m, n)?;
    let mut rng = SeededStream::new(seed, stream::EXPONENTS);
    let rows = uniform_matrix(m, n, -1.0, 1.0, &mut rng);
    Ok(ConstrainedProblem::new(Objective::LogSumExp { rows }, FeasibleSet::Simplex, None)?
        .tagged(ProblemKind::LogSumExp, seed))
}

/// Value-function LP of a random MDP; see [`mdp_lp_from_model`]. Transition
/// rows are `U[0,1]` normalized, rewards `U[0,1]`.
pub fn make_mdp_lp<T: Scalar>(states: usize, actions: usize, discount: f64, seed: u64) -> Result<ConstrainedProblem<T>> {
    check_positive(states, actions)?;
    let mut trng = SeededStream::new(seed, stream::TRANSITIONS);
    let mut rrng = SeededStream::new(seed, stream::REWARDS);
    let mut transitions = Vec::with_capacity(states);
    let mut rewards = Vec::with_capacity(states);
    for _ in 0..states {
        let mut ps = Vec::with_capacity(actions);
        let mut rs = Vec::with_capacity(actions);
        for _ in 0..actions {
            let raw: Vec<f64> = (0..states).map(|_| trng.unit()).collect();
            let total: f64 = raw.iter().sum();
            ps.push(raw.iter().map(|p| p / total).collect());
            rs.push(rrng.uniform::<f64>(0.0, 1.0));
        }
        transitions.push(ps);
        rewards.push(rs);
    }
    Ok(mdp_lp_from_model(&transitions, &rewards, discount)?.tagged(
        ProblemKind::MdpLp { states, actions, discount },
        seed,
    ))
}

/// `min 1ᵀV  s.t.  γ P(·|s,a)ᵀV − V(s) ≤ −r(s,a)` for every pair `(s, a)`,
/// row index `s·actions + a`. `transitions[s][a]` is a distribution over
/// next states.
pub fn mdp_lp_from_model<T: Scalar>(
    transitions: &[Vec<Vec<f64>>],
    rewards: &[Vec<f64>],
    discount: f64,
) -> Result<ConstrainedProblem<T>> {
    let states = transitions.len();
    let actions = transitions.first().map_or(0, Vec::len);
    check_positive(states, actions)?;
    if !(discount > 0.0 && discount < 1.0) {
        return Err(Error::InvalidParameter(format!("discount must lie in (0,1), got {discount}")));
    }
    check_dim(states, rewards.len())?;
    let m = states * actions;
    let mut a = Matrix::zeros(m, states);
    let mut b = vec![T::zero(); m];
    for s in 0..states {
        check_dim(actions, transitions[s].len())?;
        check_dim(actions, rewards[s].len())?;
        for act in 0..actions {
            let row = s * actions + act;
            let p = &transitions[s][act];
            check_dim(states, p.len())?;
            if p.iter().any(|&v| v < 0.0) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!("transition row ({s},{act}) is not a distribution")));
            }
            for (sp, &v) in p.iter().enumerate() {
                a[(row, sp)] = T::lit(discount * v);
            }
            a[(row, s)] -= T::one();
            b[row] = T::lit(-rewards[s][act]);
        }
    }
    let problem = ConstrainedProblem::new(
        Objective::Linear { c: vec![T::one(); states] },
        FeasibleSet::FreeSpace,
        Some(LinearConstraint { a, b, sense: Sense::Inequality }),
    )?;
    Ok(problem.tagged(ProblemKind::MdpLp { states, actions, discount }, 0))
}

/// `min ½xᵀWx  s.t.  Ax ≤ b` with `W = ωωᵀ`, `ω ~ U[0,2]ⁿ`, `A ~ U[0,1]^{m×n}`,
/// `b ~ U[−1,1]^m`.
pub fn make_random_qp<T: Scalar>(m: usize, n: usize, seed: u64) -> Result<ConstrainedProblem<T>> {
    check_positive(m, n)?;
    let omega: Vec<T> = SeededStream::new(seed, stream::QUAD_FACTOR).uniform_vec(n, 0.0, 2.0);
    let a = uniform_matrix(m, n, 0.0, 1.0, &mut SeededStream::new(seed, stream::CONSTRAINT_MATRIX));
    let b = SeededStream::new(seed, stream::CONSTRAINT_RHS).uniform_vec(m, -1.0, 1.0);
    let problem = ConstrainedProblem::new(
        Objective::Quadratic {
            w: Matrix::outer(&omega, &omega),
            c: vec![T::zero(); n],
            constant: T::zero(),
        },
        FeasibleSet::FreeSpace,
        Some(LinearConstraint { a, b, sense: Sense::Inequality }),
    )?;
    Ok(problem.tagged(ProblemKind::RandomQp, seed))
}

/// `min cᵀx  s.t.  Ax = b` with `m > n`, `A ~ U[−1,1]` of full column rank,
/// `b = Ax₀` for `x₀ ~ U[−1,1]ⁿ` (the unique feasible point) and `c ~ U[−1,1]ⁿ`.
pub fn make_counterexample_lp<T: Scalar>(m: usize, n: usize, seed: u64) -> Result<ConstrainedProblem<T>> {
    check_positive(m, n)?;
    if m <= n {
        return Err(Error::InvalidParameter(format!("need m > n, got m={m} n={n}")));
    }
    let mut arng = SeededStream::new(seed, stream::CONSTRAINT_MATRIX);
    let mut a = None;
    for _ in 0..MAX_RESAMPLES {
        let cand: Matrix<T> = uniform_matrix(m, n, -1.0, 1.0, &mut arng);
        if Cholesky::factor(&cand.gram(), T::lit(1e-10)).is_ok() {
            a = Some(cand);
            break;
        }
    }
    let a = a.ok_or(Error::RankDeficient)?;
    let x0: Vec<T> = SeededStream::new(seed, stream::FEASIBLE_POINT).uniform_vec(n, -1.0, 1.0);
    let b = a.mul_vec(&x0);
    let c = SeededStream::new(seed, stream::COST).uniform_vec(n, -1.0, 1.0);
    let problem = ConstrainedProblem::new(
        Objective::Linear { c },
        FeasibleSet::FreeSpace,
        Some(LinearConstraint { a, b, sense: Sense::Equality }),
    )?;
    Ok(problem.tagged(ProblemKind::Counterexample, seed))
}
