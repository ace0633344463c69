use super::{Algorithm, IterRecord, RunOptions, RunStatus, RunTrace};
use crate::error::{Error, Result};
use crate::geometry::{BregmanGeometry, Domain, MirrorPoint};
use crate::linalg::{dot, norm2, norm_inf};
use crate::metrics::{dual_optimal_value, dual_optimum, max_divergence_over_ball, BoundChecker, BoundId};
use crate::problems::{ConstrainedProblem, ReferenceSolution};
use crate::rng::{stream, SeededStream};
use crate::scalar::Scalar;

/// Per-run bookkeeping shared by the outer loops.
pub(crate) struct Monitor<'a, T: Scalar> {
    pub problem: &'a ConstrainedProblem<T>,
    pub geometry: &'a BregmanGeometry<T>,
    /// Iterates are multipliers (`true`) or primal points (`false`).
    pub dual_mode: bool,
    pub reference: Option<&'a ReferenceSolution<T>>,
    pub lambda_star: Option<Vec<T>>,
    pub d_star: Option<T>,
    pub checker: BoundChecker<T>,
    pub records: Vec<IterRecord<T>>,
    pub lambda0: Vec<T>,
    samples: usize,
    rng: SeededStream,
    erg_sum: Vec<T>,
    erg_total: T,
    ball: Option<(bool, T)>,
}

impl<'a, T: Scalar> Monitor<'a, T> {
    pub fn new(
        problem: &'a ConstrainedProblem<T>,
        geometry: &'a BregmanGeometry<T>,
        dual_mode: bool,
        opts: &RunOptions<'a, T>,
        lambda0: &[T],
        inner_tol: T,
    ) -> Self {
        let reference = opts.reference;
        Self {
            problem,
            geometry,
            dual_mode,
            reference,
            lambda_star: reference.map(|r| dual_optimum(r, geometry)),
            d_star: reference.map(|r| dual_optimal_value(r, geometry)),
            checker: BoundChecker::new(inner_tol, opts.strict),
            records: Vec::new(),
            lambda0: lambda0.to_vec(),
            samples: opts.samples,
            rng: SeededStream::new(opts.seed, stream::CHECK_SAMPLES),
            erg_sum: Vec::new(),
            erg_total: T::zero(),
            ball: None,
        }
    }

    pub fn f_star(&self) -> Option<T> {
        self.reference.map(|r| r.f_star)
    }

    /// `D(λ*, λ₀)`
    pub fn star_divergence(&self) -> Option<T> {
        let ls = self.lambda_star.as_ref()?;
        self.geometry.divergence_on_support(ls, &self.lambda0).ok()
    }

    /// `max D(λ, λ₀)` over the `ρ*` ball, computed once.
    pub fn ball_max(&mut self, nonneg: bool) -> Result<Option<T>> {
        let Some(r) = self.reference else { return Ok(None) };
        if let Some((nn, v)) = self.ball {
            if nn == nonneg {
                return Ok(Some(v));
            }
        }
        let v = max_divergence_over_ball(self.geometry, &self.lambda0, r.rho_star, nonneg)?;
        self.ball = Some((nonneg, v));
        Ok(Some(v))
    }

    /// `d(λ)` where it has a closed form.
    pub fn dual_at(&self, lambda: &[T]) -> Option<T> {
        (!self.dual_mode).then(|| -self.problem.value(lambda))
    }

    /// Random points of the multiplier domain around `center`, plus `λ*`.
    pub fn lambda_samples(&mut self, center: &[T]) -> Vec<Vec<T>> {
        let m = center.len();
        let scale = T::one() + norm_inf(center);
        let mut out = Vec::with_capacity(self.samples + 1);
        for _ in 0..self.samples {
            let p: Vec<T> = match self.geometry.domain() {
                Domain::Simplex(_) => {
                    let e: Vec<T> = (0..m).map(|_| T::lit(-(1.0 - self.rng.unit()).ln())).collect();
                    let s: T = e.iter().copied().sum();
                    e.into_iter().map(|v| v / s).collect()
                }
                Domain::NonnegativeOrthant(_) => {
                    (0..m).map(|_| self.rng.uniform::<T>(0.0, 2.0) * scale).collect()
                }
                Domain::FullSpace(_) => center.iter().map(|&c| c + scale * self.rng.normal::<T>()).collect(),
            };
            out.push(p);
        }
        if let Some(ls) = &self.lambda_star {
            out.push(ls.clone());
        }
        out
    }

    /// Random primal points within `radius` of `x`.
    pub fn x_samples(&mut self, x: &[T], radius: T) -> Vec<Vec<T>> {
        (0..self.samples)
            .map(|_| {
                let d: Vec<T> = (0..x.len()).map(|_| self.rng.normal::<T>()).collect();
                let n = norm2(&d);
                let s = if n > T::zero() { radius / n } else { T::zero() };
                x.iter().zip(&d).map(|(&xi, &di)| xi + s * di).collect()
            })
            .collect()
    }

    /// Builds the row for `λ_{k+1}` and folds `weight` into the ergodic sum
    /// of the primal iterate.
    #[allow(clippy::too_many_arguments)]
    pub fn record(
        &mut self,
        k: usize,
        eta: T,
        theta: Option<T>,
        point: &MirrorPoint<T>,
        x: Option<Vec<T>>,
        dual_value: Option<T>,
        weight: T,
        inner: (usize, T),
    ) -> IterRecord<T> {
        let primal: &[T] = x.as_deref().unwrap_or(&point.point);
        let primal_objective = self.problem.value(primal);
        let feasibility = self.dual_mode.then(|| self.problem.feasibility(primal));
        let f_star = self.f_star();
        let primal_gap = f_star.map(|fs| self.gap(primal_objective, fs));
        let dual_gap = self.d_star.zip(dual_value).map(|(ds, d)| ds - d);
        if self.erg_sum.is_empty() {
            self.erg_sum = vec![T::zero(); primal.len()];
        }
        self.erg_sum.iter_mut().zip(primal).for_each(|(s, &v)| *s += weight * v);
        self.erg_total += weight;
        let avg = self.ergodic_point();
        let ergodic_primal_gap = f_star.map(|fs| self.gap(self.problem.value(&avg), fs));
        let ergodic_feasibility = self.dual_mode.then(|| self.problem.feasibility(&avg));
        IterRecord {
            k,
            eta,
            theta,
            lambda: point.point.clone(),
            y: None,
            v: None,
            x,
            dual_value,
            primal_objective,
            feasibility,
            primal_gap,
            dual_gap,
            ergodic_primal_gap,
            ergodic_feasibility,
            bound: None,
            bound_lhs: None,
            bound_rhs: None,
            inner_iterations: inner.0,
            inner_residual: inner.1,
        }
    }

    fn gap(&self, value: T, f_star: T) -> T {
        if self.dual_mode {
            (value - f_star).abs()
        } else {
            value - f_star
        }
    }

    /// Current weighted average of the primal iterates.
    pub fn ergodic_point(&self) -> Vec<T> {
        self.erg_sum.iter().map(|&s| s / self.erg_total).collect()
    }

    /// Records `max{|f(x̃) − f*|, feasibility(x̃)} ≤ rhs_num / denom`.
    pub fn ergodic_bound(&mut self, bound: BoundId, t: usize, rhs_num: T, denom: T, certified: bool) -> Result<Option<(T, T)>> {
        let Some(fs) = self.f_star() else { return Ok(None) };
        let avg = self.ergodic_point();
        let lhs = (self.problem.value(&avg) - fs).abs().max(self.problem.feasibility(&avg));
        let rhs = rhs_num / denom;
        self.checker.check(bound, t, lhs, rhs, certified)?;
        Ok(Some((lhs, rhs)))
    }

    /// `f(x̃) − f* + λᵀ(Ax̃ − b) ≤ D(λ, λ₀)/Σ η` on sampled `λ`.
    pub fn ergodic_saddle(&mut self, t: usize, around: &[T], eta_sum: T) -> Result<()> {
        let Some(fs) = self.f_star() else { return Ok(()) };
        let avg = self.ergodic_point();
        let fa = self.problem.value(&avg);
        let r = self.problem.residual(&avg);
        let samples = self.lambda_samples(around);
        let mut pairs = Vec::with_capacity(samples.len());
        for l in &samples {
            let d = self.geometry.divergence_on_support(l, &self.lambda0)?;
            pairs.push((fa - fs + dot(l, &r), d / eta_sum));
        }
        self.checker.check_worst(BoundId::ErgodicSaddle, t, pairs, true)
    }

    pub fn finish(self, algorithm: Algorithm, dual_start: Option<T>, failure: Option<Error>) -> RunTrace<T> {
        let bounds = self.checker.finish();
        let status = match failure {
            Some(e @ Error::InvariantViolation { .. }) => RunStatus::InvariantViolation(e),
            Some(e) => RunStatus::InnerFailure(e),
            None => match bounds.violations().next() {
                Some(r) => RunStatus::InvariantViolation(Error::InvariantViolation {
                    bound: r.bound,
                    k: r.t,
                    lhs: r.lhs.as_f64(),
                    rhs: r.rhs.as_f64(),
                    slack: r.slack.as_f64(),
                }),
                None => RunStatus::Completed,
            },
        };
        RunTrace { algorithm, lambda0: self.lambda0, dual_start, records: self.records, bounds, status }
    }
}

/// Checks that `start` lies in the interior of the geometry's domain.
pub(crate) fn interior_start<T: Scalar>(geometry: &BregmanGeometry<T>, start: &[T]) -> Result<MirrorPoint<T>> {
    if !geometry.contains(start) {
        return Err(Error::InvalidParameter("start point is not in the domain".into()));
    }
    geometry.mirror_point(start)
}
