use super::monitor::{interior_start, Monitor};
use super::proximal::saddle_step;
use super::{Algorithm, RunOptions, RunTrace};
use crate::error::{check_dim, Error, Result};
use crate::geometry::{BregmanGeometry, Domain};
use crate::inner::{ProxEnvironment, ProxMode};
use crate::linalg::{norm2, Cholesky, Matrix};
use crate::problems::{ConstrainedProblem, Sense};
use crate::scalar::Scalar;

/// Classical accelerated augmented Lagrangian schemes. All share
/// `x_{k+1} = argmin f(x) + y_kᵀ(Ax − b) + (η/2)‖Ax − b‖²`,
/// `λ_{k+1} = y_k + η(Ax_{k+1} − b)` and
/// `t_{k+1} = (1 + √(1 + 4t_k²))/2` with `t₀ = 1`, `y₀ = λ₀`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// `y_{k+1} = λ_{k+1} + ((t_k − 1)/t_{k+1})(λ_{k+1} − λ_k)`
    Guler1,
    /// Adds `(t_k/t_{k+1})(λ_{k+1} − y_k)` to the first scheme.
    Guler2,
    /// `y_{k+1} = (1 − 1/t_{k+1})λ_{k+1} + (1/t_{k+1})(λ₀ + η Σ_{j≤k} t_j(Ax_{j+1} − b))`
    NesterovDA,
}

impl Variant {
    fn algorithm(self) -> Algorithm {
        match self {
            Variant::Guler1 => Algorithm::Guler1,
            Variant::Guler2 => Algorithm::Guler2,
            Variant::NesterovDA => Algorithm::NesterovDa,
        }
    }
}

pub(crate) fn next_t<T: Scalar>(t: T) -> T {
    T::lit(0.5) * (T::one() + (T::one() + T::lit(4.0) * t * t).sqrt())
}

/// Runs `variant` with constant `η` on an equality-constrained problem in the
/// Euclidean geometry. Records `y_k`, the last iterate `x_{k+1}` and `θ_k = 1/t_k`.
pub fn run_classical_scheme<T: Scalar>(
    problem: &ConstrainedProblem<T>,
    variant: Variant,
    eta: T,
    lambda0: &[T],
    iters: usize,
    opts: &RunOptions<'_, T>,
) -> Result<RunTrace<T>> {
    let con = problem
        .constraint()
        .ok_or_else(|| Error::InvalidParameter("scheme needs linear equality constraints".into()))?;
    if con.sense != Sense::Equality {
        return Err(Error::Unsupported("classical accelerated schemes need equality constraints".into()));
    }
    if !(eta > T::zero()) || !eta.is_finite() {
        return Err(Error::InvalidParameter(format!("step size must be positive, got {eta}")));
    }
    let m = problem.constraint_dim();
    check_dim(m, lambda0.len())?;
    let geometry = BregmanGeometry::euclidean(Domain::FullSpace(m));
    let env = ProxEnvironment::new(problem, &geometry, ProxMode::DualProx)?
        .with_inner_tol(opts.inner_tol)?
        .with_inner_max_iters(opts.inner_max_iters);
    interior_start(&geometry, lambda0)?;
    let mut mon = Monitor::new(problem, &geometry, true, opts, lambda0, env.inner_tol());

    let mut lam = lambda0.to_vec();
    let mut y = lambda0.to_vec();
    let mut t = T::one();
    let mut da_sum = vec![T::zero(); m];
    let mut warm = vec![T::zero(); problem.dim()];

    let mut body = |mon: &mut Monitor<'_, T>| -> Result<()> {
        for k in 0..iters {
            let center = geometry.mirror_point(&y)?;
            let res = env.prox_step_mirror(&center, eta, Some(&warm))?;
            saddle_step(mon, &center, &res, eta, k + 1)?;
            let x = res.x.clone().ok_or(Error::MissingField("x"))?;
            let lam_next = res.point.point.clone();
            let t_next = next_t(t);
            let y_next: Vec<T> = match variant {
                Variant::Guler1 | Variant::Guler2 => {
                    let c1 = (t - T::one()) / t_next;
                    let c2 = if variant == Variant::Guler2 { t / t_next } else { T::zero() };
                    (0..m)
                        .map(|i| lam_next[i] + c1 * (lam_next[i] - lam[i]) + c2 * (lam_next[i] - y[i]))
                        .collect()
                }
                Variant::NesterovDA => {
                    let r = problem.residual(&x);
                    da_sum.iter_mut().zip(&r).for_each(|(s, &ri)| *s += t * ri);
                    let inv = T::one() / t_next;
                    (0..m)
                        .map(|i| (T::one() - inv) * lam_next[i] + inv * (lambda0[i] + eta * da_sum[i]))
                        .collect()
                }
            };
            let mut rec = mon.record(
                k,
                eta,
                Some(T::one() / t),
                &res.point,
                Some(x.clone()),
                Some(res.dual_value),
                eta,
                (res.inner_iterations, res.residual),
            );
            rec.y = Some(std::mem::replace(&mut y, y_next));
            mon.records.push(rec);
            warm = x;
            lam = lam_next;
            t = t_next;
        }
        Ok(())
    };
    let failure = body(&mut mon).err();
    Ok(mon.finish(variant.algorithm(), None, failure))
}

/// Closed-form last-iterate behaviour of the second Güler scheme on
/// `min cᵀx s.t. Ax = b` with `A` of full column rank, `y₀ = 0`, `t₀ = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CounterexamplePrediction<T> {
    /// `|cᵀ(x* − x_T)| = cᵀ(AᵀA)⁻¹c / (η t_{T−1})`
    pub primal_gap: T,
    /// `‖Ax_T − b‖ = ‖A(AᵀA)⁻¹c‖ / (η t_{T−1})`
    pub feasibility: T,
    /// `x_T = x* − (−1)^{T−1} (AᵀA)⁻¹c / (η t_{T−1})`
    pub x: Vec<T>,
    /// `λ₁ = −A(AᵀA)⁻¹c`, already dual optimal.
    pub lambda1: Vec<T>,
}

pub fn counterexample_predict<T: Scalar>(
    a: &Matrix<T>,
    b: &[T],
    c: &[T],
    eta: T,
    iters: usize,
) -> Result<CounterexamplePrediction<T>> {
    check_dim(a.rows(), b.len())?;
    check_dim(a.cols(), c.len())?;
    if iters == 0 {
        return Err(Error::InvalidParameter("prediction needs T ≥ 1".into()));
    }
    if !(eta > T::zero()) {
        return Err(Error::InvalidParameter(format!("step size must be positive, got {eta}")));
    }
    let ch = Cholesky::factor(&a.gram(), T::lit(1e-12)).map_err(|_| Error::RankDeficient)?;
    let mc = ch.solve(c);
    let x_star = ch.solve(&a.tr_mul_vec(b));
    let amc = a.mul_vec(&mc);
    let mut t = T::one();
    for _ in 1..iters {
        t = next_t(t);
    }
    let scale = T::one() / (eta * t);
    let sign = if (iters - 1) % 2 == 0 { T::one() } else { -T::one() };
    let ctmc: T = c.iter().zip(&mc).map(|(&ci, &mi)| ci * mi).sum();
    Ok(CounterexamplePrediction {
        primal_gap: ctmc * scale,
        feasibility: norm2(&amc) * scale,
        x: x_star.iter().zip(&mc).map(|(&xs, &mi)| xs - sign * mi * scale).collect(),
        lambda1: amc.iter().map(|&v| -v).collect(),
    })
}
