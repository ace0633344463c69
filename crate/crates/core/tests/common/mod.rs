#![allow(dead_code)]

use balm_core::linalg::Matrix;
use balm_core::rng::SeededStream;
use balm_core::*;

/// `min ½(x − a)² ` written as `½x² − ax + ½a²`, so `d(λ) = −½(λ − a)²`.
pub fn scalar_quadratic(a: f64) -> Problem64 {
    let obj = Objective::Quadratic { w: Matrix::identity(1), c: vec![-a], constant: 0.5 * a * a };
    ConstrainedProblem::new(obj, FeasibleSet::FreeSpace, None).unwrap()
}

/// `½(x − a)ᵀ W (x − a)` with `W = Q diag(eigs) Qᵀ` for a seeded rotation.
pub fn quadratic(eigs: &[f64], seed: u64) -> Problem64 {
    let n = eigs.len();
    let mut rng = SeededStream::new(seed, 7);
    let mut q: Vec<Vec<f64>> = Vec::new();
    while q.len() < n {
        let mut v: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        for u in &q {
            let p: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= p * b);
        }
        let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if nv > 1e-6 {
            q.push(v.into_iter().map(|a| a / nv).collect());
        }
    }
    let w = Matrix::from_fn(n, n, |i, j| (0..n).map(|k| q[k][i] * eigs[k] * q[k][j]).sum());
    let a: Vec<f64> = (0..n).map(|_| rng.uniform(-2.0, 2.0)).collect();
    let wa = w.mul_vec(&a);
    let c: Vec<f64> = wa.iter().map(|v| -v).collect();
    let constant = 0.5 * a.iter().zip(&wa).map(|(x, y)| x * y).sum::<f64>();
    ConstrainedProblem::new(Objective::Quadratic { w, c, constant }, FeasibleSet::FreeSpace, None).unwrap()
}

/// `min x²/2 s.t. x = 1`.
pub fn equality_toy() -> Problem64 {
    let obj = Objective::Quadratic { w: Matrix::identity(1), c: vec![0.0], constant: 0.0 };
    let con = LinearConstraint { a: Matrix::identity(1), b: vec![1.0], sense: Sense::Equality };
    ConstrainedProblem::new(obj, FeasibleSet::FreeSpace, Some(con)).unwrap()
}

pub fn full_space(n: usize) -> Geometry64 {
    BregmanGeometry::euclidean(Domain::FullSpace(n))
}

pub fn simplex_entropy(n: usize) -> Geometry64 {
    BregmanGeometry::entropy(Domain::Simplex(n)).unwrap()
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
