//! Bound checking, ergodic averages, bound right-hand sides and log-log rate
//! fits over run traces.

mod ball;
mod rate;

pub use ball::max_divergence_over_ball;
pub use rate::{fit_rate, fit_series, RateFit, Series};

use crate::error::{Error, Result};
use crate::geometry::BregmanGeometry;
use crate::problems::ReferenceSolution;
use crate::scalar::Scalar;
use crate::solvers::{RunTrace, StepSchedule};
use std::fmt;

/// Identifies one certified inequality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundId {
    /// `η(d(λ) − d(λ⁺)) ≤ D(λ,λ_k) − D(λ,λ⁺) − D(λ⁺,λ_k)` on sampled `λ`.
    ProxInequality,
    /// `d(λ_{k+1}) ≥ d(λ_k)`.
    DualMonotone,
    /// `D(λ*, λ_{k+1}) ≤ D(λ*, λ_k)`.
    DistanceMonotone,
    /// `d* − d(λ_T) ≤ D(λ*, λ₀)/Σ η_k`.
    ProxDualGap,
    /// `L(x⁺, λ) − L(x, λ⁺) ≤ ⟨∇h(λ⁺) − ∇h(y), λ − λ⁺⟩/η` on sampled `(x, λ)`.
    SaddleStep,
    /// `f(x̃_T) − f* + λᵀ(Ax̃_T − b) ≤ D(λ,λ₀)/Σ η_k` on sampled `λ` in the ball.
    ErgodicSaddle,
    /// `max{|f(x̃_T) − f*|, ‖Ax̃_T − b‖} ≤ max_{‖λ‖≤ρ*} D(λ,λ₀)/Σ η_k`.
    ErgodicEquality,
    /// As above with `‖[Ax̃_T − b]₊‖` and the nonnegative ball.
    ErgodicInequality,
    /// `d* − d(λ_T) ≤ Π(1 − θ_i)(d* − d(λ₀) + A D(λ*,λ₀))`.
    EstimateDualGap,
    /// `(1 + √(A/G)Σ√η)⁻² ≤ Π(1 − θ_i) ≤ (1 + ½√(A/G)Σ√η)⁻²`.
    ProductBand,
    /// `d* − d(λ_T) ≤ 4G D(λ*,λ₀)/(Σ√η_k)²`.
    MemorylessDualGap,
    /// `d(λ) − d(λ_{k+1}) ≤ θ_k² G D(λ,λ₀)/η_k`.
    DualAveragingGap,
    /// Accelerated ergodic bound, equality constraints.
    AcceleratedEquality,
    /// Accelerated ergodic bound, inequality constraints.
    AcceleratedInequality,
    /// `d* − d(μ_T) ≤ 4L D(λ*, μ₀)/T²`.
    DegenerateDualGap,
    /// `η_k/θ_k² = η_{k+1}/θ_{k+1}² − η_{k+1}/θ_{k+1}`.
    ThetaRecursion,
    /// `√η_k/Σ√η_i ≤ θ_k ≤ 2√η_k/Σ√η_i`.
    ThetaBand,
    /// `Gθ_k² = η_k A_k (1 − θ_k)`.
    ThetaQuadratic,
    /// `max φ_k ≤ d(λ_k)` for the estimate functions.
    EstimateDominance,
    /// `Σ_{j≤k} η_j/θ_j = η_k/θ_k²`.
    WeightSum,
}

impl BoundId {
    pub const ALL: [BoundId; 20] = [
        BoundId::ProxInequality,
        BoundId::DualMonotone,
        BoundId::DistanceMonotone,
        BoundId::ProxDualGap,
        BoundId::SaddleStep,
        BoundId::ErgodicSaddle,
        BoundId::ErgodicEquality,
        BoundId::ErgodicInequality,
        BoundId::EstimateDualGap,
        BoundId::ProductBand,
        BoundId::MemorylessDualGap,
        BoundId::DualAveragingGap,
        BoundId::AcceleratedEquality,
        BoundId::AcceleratedInequality,
        BoundId::DegenerateDualGap,
        BoundId::ThetaRecursion,
        BoundId::ThetaBand,
        BoundId::ThetaQuadratic,
        BoundId::EstimateDominance,
        BoundId::WeightSum,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoundId::ProxInequality => "prox_inequality",
            BoundId::DualMonotone => "dual_monotone",
            BoundId::DistanceMonotone => "distance_monotone",
            BoundId::ProxDualGap => "prox_dual_gap",
            BoundId::SaddleStep => "saddle_step",
            BoundId::ErgodicSaddle => "ergodic_saddle",
            BoundId::ErgodicEquality => "ergodic_equality",
            BoundId::ErgodicInequality => "ergodic_inequality",
            BoundId::EstimateDualGap => "estimate_dual_gap",
            BoundId::ProductBand => "product_band",
            BoundId::MemorylessDualGap => "memoryless_dual_gap",
            BoundId::DualAveragingGap => "dual_averaging_gap",
            BoundId::AcceleratedEquality => "accelerated_equality",
            BoundId::AcceleratedInequality => "accelerated_inequality",
            BoundId::DegenerateDualGap => "degenerate_dual_gap",
            BoundId::ThetaRecursion => "theta_recursion",
            BoundId::ThetaBand => "theta_band",
            BoundId::ThetaQuadratic => "theta_quadratic",
            BoundId::EstimateDominance => "estimate_dominance",
            BoundId::WeightSum => "weight_sum",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|b| b.name() == s)
    }
}

impl fmt::Display for BoundId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow<T> {
    /// Number of completed iterations when the bound was evaluated.
    pub t: usize,
    pub bound: BoundId,
    pub lhs: T,
    pub rhs: T,
    /// `rhs − lhs`
    pub margin: T,
    pub slack: T,
    /// `false` when the inequality depends on a hypothesis the geometry is
    /// not known to satisfy; such rows are reported but never violate.
    pub certified: bool,
}

impl<T: Scalar> BoundRow<T> {
    pub fn violated(&self) -> bool {
        self.certified && self.margin < -self.slack
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BoundReport<T> {
    pub rows: Vec<BoundRow<T>>,
}

impl<T: Scalar> BoundReport<T> {
    pub fn violations(&self) -> impl Iterator<Item = &BoundRow<T>> {
        self.rows.iter().filter(|r| r.violated())
    }

    pub fn passed(&self) -> bool {
        self.violations().next().is_none()
    }

    pub fn of(&self, bound: BoundId) -> impl Iterator<Item = &BoundRow<T>> {
        self.rows.iter().filter(move |r| r.bound == bound)
    }

    /// Smallest `margin + slack` over rows of `bound`, if any.
    pub fn worst(&self, bound: BoundId) -> Option<T> {
        self.of(bound).map(|r| r.margin + r.slack).reduce(T::min)
    }
}

/// `ε = 10·tol·(1 + |lhs| + |rhs|)`
pub fn slack<T: Scalar>(inner_tol: T, lhs: T, rhs: T) -> T {
    T::lit(10.0) * inner_tol * (T::one() + lhs.abs() + rhs.abs())
}

/// Collects bound rows during a run.
#[derive(Debug, Clone)]
pub struct BoundChecker<T> {
    inner_tol: T,
    strict: bool,
    report: BoundReport<T>,
}

impl<T: Scalar> BoundChecker<T> {
    pub fn new(inner_tol: T, strict: bool) -> Self {
        Self { inner_tol, strict, report: BoundReport::default() }
    }

    /// Records `lhs ≤ rhs` with the inner-error slack.
    pub fn check(&mut self, bound: BoundId, t: usize, lhs: T, rhs: T, certified: bool) -> Result<()> {
        let s = slack(self.inner_tol, lhs, rhs);
        self.check_with_slack(bound, t, lhs, rhs, s, certified)
    }

    pub fn check_with_slack(&mut self, bound: BoundId, t: usize, lhs: T, rhs: T, slack: T, certified: bool) -> Result<()> {
        let row = BoundRow { t, bound, lhs, rhs, margin: rhs - lhs, slack, certified };
        let violated = row.violated() || (certified && !(row.margin + slack).is_finite() && lhs.is_nan());
        self.report.rows.push(row);
        if violated && self.strict {
            return Err(Error::InvariantViolation {
                bound,
                k: t,
                lhs: lhs.as_f64(),
                rhs: rhs.as_f64(),
                slack: slack.as_f64(),
            });
        }
        Ok(())
    }

    /// Records the worst of several sampled instances of one inequality.
    pub fn check_worst(
        &mut self,
        bound: BoundId,
        t: usize,
        pairs: impl IntoIterator<Item = (T, T)>,
        certified: bool,
    ) -> Result<()> {
        let mut worst: Option<(T, T, T)> = None;
        for (lhs, rhs) in pairs {
            let s = slack(self.inner_tol, lhs, rhs);
            let m = rhs - lhs + s;
            if worst.is_none_or(|(_, _, wm)| m < wm || m.is_nan()) {
                worst = Some((lhs, rhs, m));
            }
        }
        match worst {
            Some((lhs, rhs, _)) => self.check(bound, t, lhs, rhs, certified),
            None => Ok(()),
        }
    }

    pub fn first_violation(&self) -> Option<&BoundRow<T>> {
        self.report.violations().next()
    }

    pub fn finish(self) -> BoundReport<T> {
        self.report
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weighting {
    /// `η_k`
    EtaWeights,
    /// `η_k / θ_k`
    EtaOverThetaWeights,
}

/// Weighted averages of `x_{k+1}` and `λ_{k+1}` over the first `t` rows.
/// `x̃` is empty when the trace has no primal iterates.
pub fn ergodic_average<T: Scalar>(trace: &RunTrace<T>, weighting: Weighting, t: usize) -> Result<(Vec<T>, Vec<T>)> {
    if t == 0 || t > trace.records.len() {
        return Err(Error::InvalidParameter(format!(
            "need 1 ≤ T ≤ {} for the ergodic average, got {t}",
            trace.records.len()
        )));
    }
    let rows = &trace.records[..t];
    let mut total = T::zero();
    let mut x_sum: Option<Vec<T>> = rows[0].x.as_ref().map(|x| vec![T::zero(); x.len()]);
    let mut l_sum = vec![T::zero(); rows[0].lambda.len()];
    for r in rows {
        let w = match weighting {
            Weighting::EtaWeights => r.eta,
            Weighting::EtaOverThetaWeights => r.eta / r.theta.ok_or(Error::MissingField("theta"))?,
        };
        total += w;
        if let Some(xs) = x_sum.as_mut() {
            let x = r.x.as_ref().ok_or(Error::MissingField("x"))?;
            xs.iter_mut().zip(x).for_each(|(s, &v)| *s += w * v);
        }
        l_sum.iter_mut().zip(&r.lambda).for_each(|(s, &v)| *s += w * v);
    }
    let norm = |v: Vec<T>| v.into_iter().map(|s| s / total).collect::<Vec<_>>();
    Ok((x_sum.map(norm).unwrap_or_default(), norm(l_sum)))
}

/// Inputs to [`bound_rhs`].
#[derive(Debug, Clone)]
pub struct BoundInputs<'a, T> {
    pub geometry: &'a BregmanGeometry<T>,
    pub reference: Option<&'a ReferenceSolution<T>>,
    pub schedule: &'a StepSchedule<T>,
    /// `θ_0, …, θ_{T−1}`; only for the accelerated bounds.
    pub thetas: &'a [T],
    pub lambda0: &'a [T],
    /// Estimate-sequence constant `A` (general accelerated scheme).
    pub a0: Option<T>,
    /// `L` of the degenerate accelerated scheme.
    pub l: Option<T>,
    /// `d(λ₀)` when known.
    pub dual_start: Option<T>,
    pub t: usize,
}

/// Right-hand side of `bound` after `t` iterations. Bounds involving `λ*`
/// use the dual optimum of the reference: the multiplier for constrained
/// problems and the primal minimizer for direct problems.
pub fn bound_rhs<T: Scalar>(bound: BoundId, inp: &BoundInputs<'_, T>) -> Result<T> {
    let g = inp.geometry.scaling_constant();
    let t = inp.t;
    if t == 0 {
        return Err(Error::InvalidParameter("bounds need at least one iteration".into()));
    }
    let reference = || inp.reference.ok_or(Error::ReferenceUnavailable { residual: f64::NAN });
    let d_star0 = || -> Result<T> {
        let r = reference()?;
        inp.geometry.divergence_on_support(&dual_optimum(r, inp.geometry), inp.lambda0)
    };
    let eta_sum = || -> Result<T> { Ok((0..t).map(|k| inp.schedule.eta(k)).collect::<Result<Vec<_>>>()?.into_iter().sum()) };
    let sqrt_sum = || -> Result<T> {
        Ok((0..t).map(|k| inp.schedule.eta(k).map(T::sqrt)).collect::<Result<Vec<_>>>()?.into_iter().sum())
    };
    let ball = |nonneg: bool| -> Result<T> {
        let r = reference()?;
        max_divergence_over_ball(inp.geometry, inp.lambda0, r.rho_star, nonneg)
    };
    let thetas = || -> Result<&[T]> {
        inp.thetas.get(..t).ok_or(Error::MissingField("theta"))
    };
    let s_last = || -> Result<T> {
        let th = thetas()?;
        let mut s = T::zero();
        for (k, &th_k) in th.iter().enumerate() {
            s += inp.schedule.eta(k)? / th_k;
        }
        Ok(s)
    };
    match bound {
        BoundId::ProxDualGap => Ok(d_star0()? / eta_sum()?),
        BoundId::ErgodicEquality => Ok(ball(false)? / eta_sum()?),
        BoundId::ErgodicInequality => Ok(ball(true)? / eta_sum()?),
        BoundId::MemorylessDualGap => {
            let s = sqrt_sum()?;
            Ok(T::lit(4.0) * g * d_star0()? / (s * s))
        }
        BoundId::DualAveragingGap => {
            let th = thetas()?[t - 1];
            Ok(th * th * g * d_star0()? / inp.schedule.eta(t - 1)?)
        }
        BoundId::AcceleratedEquality | BoundId::AcceleratedInequality => {
            let nonneg = bound == BoundId::AcceleratedInequality;
            let sum_theta: T = thetas()?.iter().copied().sum();
            Ok(g * ball(nonneg)? * (T::one() + sum_theta) / s_last()?)
        }
        BoundId::EstimateDualGap => {
            let a = inp.a0.ok_or(Error::MissingField("A0"))?;
            let r = reference()?;
            let d0 = inp.dual_start.ok_or(Error::MissingField("d(lambda0)"))?;
            let prod: T = thetas()?.iter().map(|&th| T::one() - th).fold(T::one(), |p, v| p * v);
            Ok(prod * (dual_optimal_value(r, inp.geometry) - d0 + a * d_star0()?))
        }
        BoundId::ProductBand => {
            let a = inp.a0.ok_or(Error::MissingField("A0"))?;
            let den = T::one() + T::lit(0.5) * (a / g).sqrt() * sqrt_sum()?;
            Ok(T::one() / (den * den))
        }
        BoundId::DegenerateDualGap => {
            let l = inp.l.ok_or(Error::MissingField("L"))?;
            let tt = T::from_usize_lossy(t);
            Ok(T::lit(4.0) * l * d_star0()? / (tt * tt))
        }
        other => Err(Error::Unsupported(format!("{other} has no closed-form right-hand side"))),
    }
}

/// `λ*` in the geometry's coordinates: the multiplier, or the primal
/// minimizer when the geometry lives on the primal space.
pub fn dual_optimum<T: Scalar>(r: &ReferenceSolution<T>, geometry: &BregmanGeometry<T>) -> Vec<T> {
    if r.lambda_star.len() == geometry.dim() && !r.lambda_star.is_empty() {
        r.lambda_star.clone()
    } else {
        r.x_star.clone()
    }
}

/// `d(λ*)` in the maximization convention: `f*` for multipliers, `−f*` for
/// direct problems.
pub fn dual_optimal_value<T: Scalar>(r: &ReferenceSolution<T>, geometry: &BregmanGeometry<T>) -> T {
    if r.lambda_star.len() == geometry.dim() && !r.lambda_star.is_empty() {
        r.f_star
    } else {
        -r.f_star
    }
}
