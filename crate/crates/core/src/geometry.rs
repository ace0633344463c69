//! Bregman geometries: Euclidean `h = ½‖λ‖²` and entropy `h = Σ λ log λ`.
//!
//! Iterates are carried as [`MirrorPoint`]s holding both the primal
//! coordinates and `∇h` at them. Under the entropy kernel a coordinate can
//! underflow to `0.0` while its mirror coordinate stays finite, so every
//! divergence whose second argument is an iterate is evaluated through the
//! stored gradient rather than through `log`.

use crate::error::{check_dim, Error, Result};
use crate::linalg::{dot, log_sum_exp};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    FullSpace(usize),
    NonnegativeOrthant(usize),
    /// Unit simplex `{x ≥ 0, Σx = 1}`.
    Simplex(usize),
}

impl Domain {
    pub fn dim(&self) -> usize {
        match *self {
            Domain::FullSpace(m) | Domain::NonnegativeOrthant(m) | Domain::Simplex(m) => m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Euclidean,
    Entropy,
}

/// A point together with `∇h` evaluated there.
#[derive(Debug, Clone, PartialEq)]
pub struct MirrorPoint<T> {
    pub point: Vec<T>,
    pub grad: Vec<T>,
}

impl<T: Scalar> MirrorPoint<T> {
    pub fn dim(&self) -> usize {
        self.point.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BregmanGeometry<T> {
    domain: Domain,
    kind: Kind,
    g: T,
    exp_cap: T,
}

pub const DEFAULT_EXP_CAP: f64 = 700.0;

impl<T: Scalar> BregmanGeometry<T> {
    pub fn new(domain: Domain, kind: Kind) -> Result<Self> {
        if kind == Kind::Entropy && matches!(domain, Domain::FullSpace(_)) {
            return Err(Error::Unsupported(
                "entropy kernel is only defined on the orthant or the simplex".into(),
            ));
        }
        Ok(Self {
            domain,
            kind,
            g: T::one(),
            exp_cap: T::lit(DEFAULT_EXP_CAP),
        })
    }

    pub fn euclidean(domain: Domain) -> Self {
        Self::new(domain, Kind::Euclidean).expect("euclidean kernel accepts every domain")
    }

    pub fn entropy(domain: Domain) -> Result<Self> {
        Self::new(domain, Kind::Entropy)
    }

    pub fn with_scaling_constant(mut self, g: T) -> Result<Self> {
        if !(g > T::zero()) || !g.is_finite() {
            return Err(Error::InvalidParameter(format!("G must be positive, got {g}")));
        }
        self.g = g;
        Ok(self)
    }

    pub fn with_exp_cap(mut self, cap: T) -> Self {
        self.exp_cap = cap;
        self
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn scaling_constant(&self) -> T {
        self.g
    }

    pub fn exp_cap(&self) -> T {
        self.exp_cap
    }

    /// Whether the triangle-scaling inequality is known to hold with the
    /// configured `G` (only the Euclidean kernel with `G ≥ 1`).
    pub fn triangle_scaling_certified(&self) -> bool {
        self.kind == Kind::Euclidean && self.g >= T::one()
    }

    fn check(&self, p: &[T]) -> Result<()> {
        check_dim(self.dim(), p.len())
    }

    pub fn h(&self, p: &[T]) -> Result<T> {
        self.check(p)?;
        Ok(match self.kind {
            Kind::Euclidean => T::lit(0.5) * dot(p, p),
            Kind::Entropy => p.iter().map(|&v| xlogx(v)).sum(),
        })
    }

    pub fn grad_h(&self, p: &[T]) -> Result<Vec<T>> {
        self.check(p)?;
        match self.kind {
            Kind::Euclidean => Ok(p.to_vec()),
            Kind::Entropy => p
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    if v > T::zero() {
                        Ok(T::one() + v.ln())
                    } else {
                        Err(Error::NonPositiveComponent { index: i, value: v.as_f64() })
                    }
                })
                .collect(),
        }
    }

    /// Unconstrained inverse of `∇h`.
    pub fn grad_conjugate(&self, g: &[T]) -> Result<Vec<T>> {
        self.check(g)?;
        match self.kind {
            Kind::Euclidean => Ok(g.to_vec()),
            Kind::Entropy => g
                .iter()
                .enumerate()
                .map(|(i, &gi)| {
                    let e = gi - T::one();
                    if e > self.exp_cap || e.is_nan() {
                        Err(Error::DivergedMultiplier { index: i, exponent: e.as_f64() })
                    } else {
                        Ok(e.exp())
                    }
                })
                .collect(),
        }
    }

    /// `argmax_{λ ∈ domain} ⟨s, λ⟩ − h(λ)`, returned with its mirror coordinates.
    pub fn mirror_map(&self, s: &[T]) -> Result<MirrorPoint<T>> {
        self.check(s)?;
        match (self.kind, self.domain) {
            (Kind::Euclidean, Domain::FullSpace(_)) => Ok(MirrorPoint {
                point: s.to_vec(),
                grad: s.to_vec(),
            }),
            (Kind::Euclidean, Domain::NonnegativeOrthant(_)) => {
                let p: Vec<T> = s.iter().map(|&v| v.max(T::zero())).collect();
                Ok(MirrorPoint { grad: p.clone(), point: p })
            }
            (Kind::Euclidean, Domain::Simplex(_)) => {
                let p = project_simplex(s);
                Ok(MirrorPoint { grad: p.clone(), point: p })
            }
            (Kind::Entropy, Domain::NonnegativeOrthant(_)) => {
                let point = self.grad_conjugate(s)?;
                Ok(MirrorPoint { point, grad: s.to_vec() })
            }
            (Kind::Entropy, Domain::Simplex(_)) => {
                if let Some(i) = s.iter().position(|v| !v.is_finite()) {
                    return Err(Error::DivergedMultiplier { index: i, exponent: s[i].as_f64() });
                }
                let lse = log_sum_exp(s);
                let grad: Vec<T> = s.iter().map(|&v| T::one() + v - lse).collect();
                let point = grad.iter().map(|&u| (u - T::one()).exp()).collect();
                Ok(MirrorPoint { point, grad })
            }
            (Kind::Entropy, Domain::FullSpace(_)) => unreachable!("rejected at construction"),
        }
    }

    /// Mirror representation of a point strictly inside the domain.
    pub fn mirror_point(&self, p: &[T]) -> Result<MirrorPoint<T>> {
        Ok(MirrorPoint { grad: self.grad_h(p)?, point: p.to_vec() })
    }

    /// `θ a + (1 − θ) b`. Under entropy the log of the combination is
    /// formed with log-add-exp so that underflowed coordinates stay finite.
    pub fn combine(&self, a: &MirrorPoint<T>, b: &MirrorPoint<T>, theta: T) -> MirrorPoint<T> {
        let s = T::one() - theta;
        let point: Vec<T> = a
            .point
            .iter()
            .zip(&b.point)
            .map(|(&x, &y)| theta * x + s * y)
            .collect();
        let grad = match self.kind {
            Kind::Euclidean => point.clone(),
            Kind::Entropy => {
                if theta >= T::one() {
                    a.grad.clone()
                } else if theta <= T::zero() {
                    b.grad.clone()
                } else {
                    let (lt, ls) = (theta.ln(), s.ln());
                    a.grad
                        .iter()
                        .zip(&b.grad)
                        .map(|(&ga, &gb)| {
                            let (p, q) = (ga + lt, gb + ls);
                            let hi = p.max(q);
                            hi + ((p - hi).exp() + (q - hi).exp()).ln()
                        })
                        .collect()
                }
            }
        };
        MirrorPoint { point, grad }
    }

    /// `D_h(p, q)` with `q` strictly interior.
    pub fn divergence(&self, p: &[T], q: &[T]) -> Result<T> {
        self.check(p)?;
        self.check(q)?;
        match self.kind {
            Kind::Euclidean => Ok(half_sq_dist(p, q)),
            Kind::Entropy => {
                let mut d = T::zero();
                for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
                    if !(qi > T::zero()) {
                        return Err(Error::NonPositiveComponent { index: i, value: qi.as_f64() });
                    }
                    if pi < T::zero() {
                        return Err(Error::NonPositiveComponent { index: i, value: pi.as_f64() });
                    }
                    d += kl_term(pi, qi);
                }
                Ok(d)
            }
        }
    }

    /// Lower-semicontinuous extension to the boundary: `+∞` when `p` charges
    /// a coordinate where `q` vanishes.
    pub fn divergence_on_support(&self, p: &[T], q: &[T]) -> Result<T> {
        self.check(p)?;
        self.check(q)?;
        match self.kind {
            Kind::Euclidean => Ok(half_sq_dist(p, q)),
            Kind::Entropy => Ok(p
                .iter()
                .zip(q)
                .map(|(&pi, &qi)| {
                    if qi > T::zero() {
                        kl_term(pi, qi)
                    } else if pi > T::zero() {
                        T::infinity()
                    } else {
                        T::zero()
                    }
                })
                .sum()),
        }
    }

    /// `D_h(p, q)` through the stored gradient of `q`; finite even when
    /// coordinates of `q.point` have underflowed.
    pub fn divergence_mirror(&self, p: &[T], q: &MirrorPoint<T>) -> T {
        debug_assert_eq!(p.len(), q.dim());
        match self.kind {
            Kind::Euclidean => half_sq_dist(p, &q.point),
            Kind::Entropy => p
                .iter()
                .zip(q.point.iter().zip(&q.grad))
                .map(|(&pi, (&qi, &gi))| xlogx(pi) - pi * gi + qi)
                .sum(),
        }
    }

    pub fn three_point_residual(&self, a: &[T], b: &[T], c: &[T]) -> Result<T> {
        let dab = self.divergence(a, b)?;
        let dbc = self.divergence(b, c)?;
        let dac = self.divergence(a, c)?;
        let gb = self.grad_h(b)?;
        let gc = self.grad_h(c)?;
        let inner: T = gb
            .iter()
            .zip(&gc)
            .zip(b.iter().zip(a))
            .map(|((&x, &y), (&bb, &aa))| (x - y) * (bb - aa))
            .sum();
        Ok((dab + dbc - dac - inner).abs())
    }

    /// `D_h((1−θ)base + θp1, (1−θ)base + θp2) / (θ² D_h(p1, p2))`.
    pub fn triangle_scaling_ratio(&self, base: &[T], p1: &[T], p2: &[T], theta: T) -> Result<T> {
        if !(theta > T::zero() && theta <= T::one()) {
            return Err(Error::InvalidParameter(format!("theta must lie in (0,1], got {theta}")));
        }
        self.check(base)?;
        let denom = self.divergence(p1, p2)?;
        if p1 == p2 || denom <= T::zero() {
            return Err(Error::DegenerateProbe);
        }
        let s = T::one() - theta;
        let q1: Vec<T> = base.iter().zip(p1).map(|(&b, &p)| s * b + theta * p).collect();
        let q2: Vec<T> = base.iter().zip(p2).map(|(&b, &p)| s * b + theta * p).collect();
        Ok(self.divergence(&q1, &q2)? / (theta * theta * denom))
    }

    /// Default starting multiplier: ones under entropy, zeros otherwise, and
    /// the barycentre on the simplex.
    pub fn default_start(&self) -> Vec<T> {
        let m = self.dim();
        match (self.domain, self.kind) {
            (Domain::Simplex(_), _) => vec![T::one() / T::from_usize_lossy(m); m],
            (_, Kind::Entropy) => vec![T::one(); m],
            (_, Kind::Euclidean) => vec![T::zero(); m],
        }
    }

    pub fn contains(&self, p: &[T]) -> bool {
        if p.len() != self.dim() || p.iter().any(|v| !v.is_finite()) {
            return false;
        }
        let tol = T::lit(1e-9);
        match self.domain {
            Domain::FullSpace(_) => true,
            Domain::NonnegativeOrthant(_) => p.iter().all(|&v| v >= T::zero()),
            Domain::Simplex(_) => {
                p.iter().all(|&v| v >= T::zero())
                    && (p.iter().copied().sum::<T>() - T::one()).abs() <= tol
            }
        }
    }
}

#[inline]
fn xlogx<T: Scalar>(v: T) -> T {
    if v > T::zero() {
        v * v.ln()
    } else {
        T::zero()
    }
}

#[inline]
fn kl_term<T: Scalar>(p: T, q: T) -> T {
    if p > T::zero() {
        p * (p / q).ln() - p + q
    } else {
        q
    }
}

fn half_sq_dist<T: Scalar>(p: &[T], q: &[T]) -> T {
    T::lit(0.5)
        * p.iter()
            .zip(q)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<T>()
}

/// Euclidean projection onto the unit simplex (sort-based).
pub fn project_simplex<T: Scalar>(s: &[T]) -> Vec<T> {
    let mut u = s.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut cum = T::zero();
    let mut tau = T::zero();
    for (j, &uj) in u.iter().enumerate() {
        cum += uj;
        let t = (cum - T::one()) / T::from_usize_lossy(j + 1);
        if uj - t > T::zero() {
            tau = t;
        }
    }
    s.iter().map(|&v| (v - tau).max(T::zero())).collect()
}
