//! Bregman proximal point (BPP) and Bregman augmented Lagrangian (BALM)
//! methods for `min f(x) s.t. Ax ≤ b` (or `Ax = b`), with accelerated
//! variants whose convergence inequalities are checked while they run.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases below fix `f64`.

pub mod error;
pub mod geometry;
pub mod inner;
pub mod linalg;
pub mod metrics;
pub mod problems;
pub mod rng;
pub mod scalar;
pub mod solvers;

pub use error::{Error, Result};
pub use geometry::{BregmanGeometry, Domain, Kind, MirrorPoint};
pub use inner::{ProxEnvironment, ProxMode, ProxResult};
pub use metrics::{BoundId, BoundReport, BoundRow, RateFit, Series, Weighting};
pub use problems::{
    compute_reference, ConstrainedProblem, FeasibleSet, LinearConstraint, Objective, ProblemKind, ReferenceSolution,
    Sense,
};
pub use scalar::Scalar;
pub use solvers::{Algorithm, IterRecord, RunOptions, RunStatus, RunTrace, StepSchedule};

pub type Geometry64 = BregmanGeometry<f64>;
pub type Problem64 = ConstrainedProblem<f64>;
pub type Reference64 = ReferenceSolution<f64>;
pub type Schedule64 = StepSchedule<f64>;
pub type Trace64 = RunTrace<f64>;
pub type Geometry32 = BregmanGeometry<f32>;
pub type Problem32 = ConstrainedProblem<f32>;
pub type Trace32 = RunTrace<f32>;
