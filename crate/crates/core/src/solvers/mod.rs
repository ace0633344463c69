//! Outer loops: Bregman proximal point and augmented Lagrangian methods,
//! their accelerated variants, the degenerate accelerated baseline and three
//! classical accelerated augmented Lagrangian schemes.
//!
//! Every run checks the applicable convergence inequalities online and
//! returns a [`RunTrace`]. Configuration errors are returned as `Err`;
//! failures after the first step end the run early and are reported through
//! [`RunTrace::status`] so that the partial trace survives.

mod accelerated;
mod classical;
mod degenerate;
mod monitor;
mod proximal;

pub use accelerated::{run_acc_balm, run_acc_bpp_dual_avg, run_acc_bpp_general, run_acc_bpp_memoryless};
pub use classical::{counterexample_predict, run_classical_scheme, CounterexamplePrediction, Variant};
pub use degenerate::run_abpg_degenerate;
pub use proximal::{run_balm, run_bpp};

use crate::error::{Error, Result};
use crate::inner::{DEFAULT_INNER_MAX_ITERS, DEFAULT_INNER_TOL};
use crate::metrics::{BoundId, BoundReport};
use crate::problems::ReferenceSolution;
use crate::scalar::Scalar;
use std::fmt;
use std::str::FromStr;

/// Proximal parameters `η_k`.
#[derive(Debug, Clone, PartialEq)]
pub enum StepSchedule<T> {
    Constant(T),
    /// `η_k = η (k + 1)^p`
    Polynomial { eta: T, p: T },
    Explicit(Vec<T>),
}

impl<T: Scalar> StepSchedule<T> {
    pub fn constant(eta: T) -> Result<Self> {
        let s = StepSchedule::Constant(eta);
        s.validate(1)?;
        Ok(s)
    }

    pub fn polynomial(eta: T, p: T) -> Result<Self> {
        if !p.is_finite() {
            return Err(Error::InvalidParameter(format!("exponent must be finite, got {p}")));
        }
        let s = StepSchedule::Polynomial { eta, p };
        s.validate(1)?;
        Ok(s)
    }

    pub fn explicit(etas: Vec<T>) -> Result<Self> {
        let s = StepSchedule::Explicit(etas);
        if let StepSchedule::Explicit(v) = &s {
            s.validate(v.len())?;
        }
        Ok(s)
    }

    pub fn eta(&self, k: usize) -> Result<T> {
        let eta = match self {
            StepSchedule::Constant(eta) => *eta,
            StepSchedule::Polynomial { eta, p } => *eta * T::from_usize_lossy(k + 1).powf(*p),
            StepSchedule::Explicit(v) => *v.get(k).ok_or_else(|| {
                Error::InvalidParameter(format!("explicit schedule has {} entries, step {k} requested", v.len()))
            })?,
        };
        if !(eta > T::zero()) || !eta.is_finite() {
            return Err(Error::InvalidParameter(format!("step size η_{k} = {eta} must be positive and finite")));
        }
        Ok(eta)
    }

    /// Checks `η_0, …, η_{t−1}`.
    pub fn validate(&self, t: usize) -> Result<()> {
        for k in 0..t {
            self.eta(k)?;
        }
        Ok(())
    }

    /// Reads one step size per whitespace-separated token.
    pub fn from_list(text: &str) -> Result<Self> {
        let v = text
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map(T::lit)
                    .map_err(|e| Error::InvalidParameter(format!("bad step size `{t}`: {e}")))
            })
            .collect::<Result<Vec<T>>>()?;
        if v.is_empty() {
            return Err(Error::InvalidParameter("empty step-size list".into()));
        }
        Self::explicit(v)
    }
}

impl<T: Scalar> FromStr for StepSchedule<T> {
    type Err = Error;

    /// `const:η` or `poly:η,p`. File schedules are read by the caller and
    /// passed to [`StepSchedule::from_list`].
    fn from_str(s: &str) -> Result<Self> {
        let num = |t: &str| -> Result<T> {
            t.trim()
                .parse::<f64>()
                .map(T::lit)
                .map_err(|e| Error::InvalidParameter(format!("bad number `{t}` in schedule: {e}")))
        };
        match s.split_once(':') {
            Some(("const", v)) => Self::constant(num(v)?),
            Some(("poly", v)) => {
                let (eta, p) = v
                    .split_once(',')
                    .ok_or_else(|| Error::InvalidParameter(format!("expected poly:η,p, got `{s}`")))?;
                Self::polynomial(num(eta)?, num(p)?)
            }
            _ => Err(Error::InvalidParameter(format!("unknown schedule `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Bpp,
    Balm,
    /// Estimate-sequence form with constant `A`.
    AccBpp,
    /// Memoryless form.
    AccBpp2,
    /// Dual-averaging form.
    AccBpp3,
    AccBalm,
    Guler1,
    Guler2,
    NesterovDa,
    Abpg0,
}

impl Algorithm {
    pub const ALL: [Algorithm; 10] = [
        Algorithm::Bpp,
        Algorithm::Balm,
        Algorithm::AccBpp,
        Algorithm::AccBpp2,
        Algorithm::AccBpp3,
        Algorithm::AccBalm,
        Algorithm::Guler1,
        Algorithm::Guler2,
        Algorithm::NesterovDa,
        Algorithm::Abpg0,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Bpp => "bpp",
            Algorithm::Balm => "balm",
            Algorithm::AccBpp => "acc-bpp",
            Algorithm::AccBpp2 => "acc-bpp2",
            Algorithm::AccBpp3 => "acc-bpp3",
            Algorithm::AccBalm => "acc-balm",
            Algorithm::Guler1 => "guler1",
            Algorithm::Guler2 => "guler2",
            Algorithm::NesterovDa => "nesterov-da",
            Algorithm::Abpg0 => "abpg0",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown algorithm `{s}`")))
    }
}

/// Settings shared by every run.
#[derive(Debug, Clone)]
pub struct RunOptions<'r, T> {
    /// Enables the bounds that involve `λ*`, `f*` or `ρ*`.
    pub reference: Option<&'r ReferenceSolution<T>>,
    /// Stop at the first certified violation instead of recording it.
    pub strict: bool,
    /// Random `λ` (and `x`) samples per step for the sampled inequalities.
    pub samples: usize,
    pub seed: u64,
    /// Inner tolerance for runners that build their own prox environment.
    pub inner_tol: T,
    pub inner_max_iters: usize,
}

impl<T: Scalar> Default for RunOptions<'_, T> {
    fn default() -> Self {
        Self {
            reference: None,
            strict: false,
            samples: 20,
            seed: 0,
            inner_tol: T::lit(DEFAULT_INNER_TOL),
            inner_max_iters: DEFAULT_INNER_MAX_ITERS,
        }
    }
}

impl<'r, T: Scalar> RunOptions<'r, T> {
    pub fn with_reference(mut self, reference: &'r ReferenceSolution<T>) -> Self {
        self.reference = Some(reference);
        self
    }
}

/// One outer iteration `k`, describing the iterate `λ_{k+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterRecord<T> {
    pub k: usize,
    pub eta: T,
    pub theta: Option<T>,
    pub lambda: Vec<T>,
    /// Prox centre `y_k` of accelerated schemes.
    pub y: Option<Vec<T>>,
    pub v: Option<Vec<T>>,
    /// `x_{k+1}` for constrained runs.
    pub x: Option<Vec<T>>,
    /// `d(λ_{k+1})`, maximization convention.
    pub dual_value: Option<T>,
    /// `f(x_{k+1})`, or `f(λ_{k+1})` for direct problems.
    pub primal_objective: T,
    /// `‖Ax − b‖` or `‖[Ax − b]₊‖`.
    pub feasibility: Option<T>,
    pub primal_gap: Option<T>,
    pub dual_gap: Option<T>,
    pub ergodic_primal_gap: Option<T>,
    pub ergodic_feasibility: Option<T>,
    /// Main convergence bound of the algorithm at `T = k + 1`.
    pub bound: Option<BoundId>,
    pub bound_lhs: Option<T>,
    pub bound_rhs: Option<T>,
    pub inner_iterations: usize,
    pub inner_residual: T,
}

impl<T: Scalar> IterRecord<T> {
    pub fn margin(&self) -> Option<T> {
        Some(self.bound_rhs? - self.bound_lhs?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Completed,
    /// A certified bound failed; in strict mode the run stopped there.
    InvariantViolation(Error),
    /// The inner solver failed; the trace holds the completed iterations.
    InnerFailure(Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace<T> {
    pub algorithm: Algorithm,
    pub lambda0: Vec<T>,
    /// `d(λ₀)` when it has a closed form.
    pub dual_start: Option<T>,
    pub records: Vec<IterRecord<T>>,
    pub bounds: BoundReport<T>,
    pub status: RunStatus,
}

impl<T: Scalar> RunTrace<T> {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&IterRecord<T>> {
        self.records.last()
    }

    /// `Err` with the first violation or inner failure.
    pub fn into_result(self) -> Result<Self> {
        match &self.status {
            RunStatus::Completed => Ok(self),
            RunStatus::InvariantViolation(e) | RunStatus::InnerFailure(e) => Err(e.clone()),
        }
    }
}

/// `1/θ_{k+1}` from `η_k/θ_k² = η_{k+1}/θ_{k+1}² − η_{k+1}/θ_{k+1}`.
pub(crate) fn next_theta<T: Scalar>(theta: T, eta: T, eta_next: T) -> T {
    let r = eta / (eta_next * theta * theta);
    let u = T::lit(0.5) * (T::one() + (T::one() + T::lit(4.0) * r).sqrt());
    T::one() / u
}
