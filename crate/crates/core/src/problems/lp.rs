//! Exact solution of the matrix game `min_{x ∈ Δ_n} max_{w ∈ Δ_m} wᵀCx` by a
//! dense tableau simplex with Bland's rule. Used for the piecewise-max
//! reference.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct GameSolution<T> {
    /// Minimizing mixed strategy, `x ∈ Δ_n`.
    pub x: Vec<T>,
    /// Maximizing mixed strategy, `w ∈ Δ_m`.
    pub w: Vec<T>,
    pub value: T,
}

/// Shifts `C` to be entrywise ≥ 1 and solves `max 1ᵀu  s.t.  C'u ≤ 1, u ≥ 0`;
/// then `x = u/Σu` and the game value is `1/Σu − shift`.
pub fn solve_matrix_game<T: Scalar>(c: &Matrix<T>) -> Result<GameSolution<T>> {
    let (m, n) = (c.rows(), c.cols());
    if m == 0 || n == 0 {
        return Err(Error::InvalidParameter("empty game matrix".into()));
    }
    let min = c.as_slice().iter().fold(T::infinity(), |a, &b| a.min(b));
    let shift = T::one() - min;
    let cols = n + m;
    let mut tab = Matrix::<T>::zeros(m, cols);
    for i in 0..m {
        for j in 0..n {
            tab[(i, j)] = c[(i, j)] + shift;
        }
        tab[(i, n + i)] = T::one();
    }
    let mut rhs = vec![T::one(); m];
    let mut z: Vec<T> = (0..cols).map(|j| if j < n { T::one() } else { T::zero() }).collect();
    let mut basis: Vec<usize> = (n..n + m).collect();
    let eps = T::lit(1e-12);
    let max_pivots = 50 * (m + n) * (m + n);

    for _ in 0..max_pivots {
        let Some(enter) = (0..cols).find(|&j| z[j] > eps) else {
            let mut u = vec![T::zero(); n];
            for (i, &bi) in basis.iter().enumerate() {
                if bi < n {
                    u[bi] = rhs[i];
                }
            }
            let y: Vec<T> = (0..m).map(|i| (-z[n + i]).max(T::zero())).collect();
            let su: T = u.iter().copied().sum();
            let sy: T = y.iter().copied().sum();
            if !(su > T::zero() && sy > T::zero()) {
                return Err(Error::NumericalInstability("degenerate game tableau".into()));
            }
            return Ok(GameSolution {
                x: u.iter().map(|&v| v / su).collect(),
                w: y.iter().map(|&v| v / sy).collect(),
                value: T::one() / su - shift,
            });
        };
        let mut leave: Option<usize> = None;
        for i in 0..m {
            let a = tab[(i, enter)];
            if a > eps {
                let ratio = rhs[i] / a;
                leave = match leave {
                    None => Some(i),
                    Some(l) => {
                        let rl = rhs[l] / tab[(l, enter)];
                        if ratio < rl || (ratio == rl && basis[i] < basis[l]) {
                            Some(i)
                        } else {
                            Some(l)
                        }
                    }
                };
            }
        }
        let Some(row) = leave else {
            return Err(Error::NumericalInstability("unbounded game tableau".into()));
        };
        let p = tab[(row, enter)];
        for j in 0..cols {
            tab[(row, j)] /= p;
        }
        rhs[row] /= p;
        for i in 0..m {
            if i == row {
                continue;
            }
            let f = tab[(i, enter)];
            if f != T::zero() {
                for j in 0..cols {
                    let v = tab[(row, j)];
                    tab[(i, j)] -= f * v;
                }
                let r = rhs[row];
                rhs[i] -= f * r;
            }
        }
        let f = z[enter];
        for j in 0..cols {
            z[j] -= f * tab[(row, j)];
        }
        basis[row] = enter;
    }
    Err(Error::NumericalInstability("simplex pivot limit reached".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matching_pennies() {
        let c: Matrix<f64> = Matrix::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        let s = solve_matrix_game(&c).unwrap();
        assert!(s.value.abs() < 1e-14);
        assert!((s.x[0] - 0.5).abs() < 1e-14 && (s.w[0] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn dominated_column() {
        // min over x of max(x1·1 + x2·3, x1·2 + x2·4): pick column 1, value 2
        let c: Matrix<f64> = Matrix::from_rows(&[vec![1.0, 3.0], vec![2.0, 4.0]]).unwrap();
        let s = solve_matrix_game(&c).unwrap();
        assert!((s.value - 2.0).abs() < 1e-14);
        assert!((s.x[0] - 1.0).abs() < 1e-14);
    }
}
