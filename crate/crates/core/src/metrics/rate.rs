use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::solvers::RunTrace;

/// Least-squares fit of `log(value)` against `log(k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (usize, usize),
    /// Points in the window skipped because they were not finite and positive.
    pub dropped: usize,
}

/// Fits over points with `lo ≤ k ≤ hi`. Needs at least five usable points.
pub fn fit_rate(ks: &[usize], values: &[f64], window: (usize, usize)) -> Result<RateFit> {
    if ks.len() != values.len() {
        return Err(Error::DimensionMismatch { expected: ks.len(), found: values.len() });
    }
    let (lo, hi) = window;
    let mut dropped = 0;
    let mut pts = Vec::new();
    for (&k, &v) in ks.iter().zip(values) {
        if k < lo || k > hi {
            continue;
        }
        if k == 0 || !(v > 0.0) || !v.is_finite() {
            dropped += 1;
            continue;
        }
        pts.push(((k as f64).ln(), v.ln()));
    }
    if pts.len() < 5 {
        return Err(Error::TooFewPoints { found: pts.len() });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    Ok(RateFit { slope, intercept, r_squared, window, dropped })
}

/// Per-iteration quantities a trace can be fitted on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Series {
    /// `|f(x_{k+1}) − f*|`, or `f(λ_{k+1}) − f*` for direct problems.
    PrimalGap,
    /// `d* − d(λ_{k+1})`
    DualGap,
    Feasibility,
    ErgodicPrimalGap,
    ErgodicFeasibility,
}

impl Series {
    pub fn name(self) -> &'static str {
        match self {
            Series::PrimalGap => "primal_gap",
            Series::DualGap => "dual_gap",
            Series::Feasibility => "feasibility",
            Series::ErgodicPrimalGap => "ergodic_primal_gap",
            Series::ErgodicFeasibility => "ergodic_feasibility",
        }
    }
}

/// Fits `series` of a trace against the iteration count `k + 1`.
pub fn fit_series<T: Scalar>(trace: &RunTrace<T>, series: Series, window: (usize, usize)) -> Result<RateFit> {
    let mut ks = Vec::new();
    let mut vs = Vec::new();
    for r in &trace.records {
        let v = match series {
            Series::PrimalGap => r.primal_gap,
            Series::DualGap => r.dual_gap,
            Series::Feasibility => r.feasibility,
            Series::ErgodicPrimalGap => r.ergodic_primal_gap,
            Series::ErgodicFeasibility => r.ergodic_feasibility,
        };
        if let Some(v) = v {
            ks.push(r.k + 1);
            vs.push(v.as_f64());
        }
    }
    if ks.is_empty() {
        return Err(Error::MissingField(series.name()));
    }
    fit_rate(&ks, &vs, window)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_power_law() {
        let ks: Vec<usize> = (1..=50).collect();
        let vs: Vec<f64> = ks.iter().map(|&k| 3.0 * (k as f64).powf(-1.5)).collect();
        let f = fit_rate(&ks, &vs, (10, 50)).unwrap();
        assert!((f.slope + 1.5).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-10);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_points() {
        let r = fit_rate(&[1, 2, 3, 4], &[1.0, 0.5, 0.3, 0.2], (1, 4));
        assert_eq!(r, Err(Error::TooFewPoints { found: 4 }));
    }

    #[test]
    fn drops_nonpositive() {
        let ks: Vec<usize> = (1..=8).collect();
        let mut vs: Vec<f64> = ks.iter().map(|&k| 1.0 / k as f64).collect();
        vs[2] = 0.0;
        let f = fit_rate(&ks, &vs, (1, 8)).unwrap();
        assert_eq!(f.dropped, 1);
        assert!((f.slope + 1.0).abs() < 1e-12);
    }
}
