//! Small dense linear algebra: a row-major matrix, vector helpers, Cholesky and
//! LU solves. Problem sizes here are at most a few hundred rows, so everything
//! is plain loops over slices.

use crate::error::{check_dim, Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        check_dim(rows * cols, data.len())?;
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            check_dim(cols, r.len())?;
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Rank-one matrix `u vᵀ`.
    pub fn outer(u: &[T], v: &[T]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j])
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// `A x`
    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `Aᵀ y`
    pub fn tr_mul_vec(&self, y: &[T]) -> Vec<T> {
        debug_assert_eq!(y.len(), self.rows);
        let mut out = vec![T::zero(); self.cols];
        for (i, &yi) in y.iter().enumerate() {
            if yi == T::zero() {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * yi;
            }
        }
        out
    }

    /// `Aᵀ diag(w) A`
    pub fn weighted_gram(&self, w: &[T]) -> Self {
        debug_assert_eq!(w.len(), self.rows);
        let n = self.cols;
        let mut g = Self::zeros(n, n);
        for (i, &wi) in w.iter().enumerate() {
            if wi == T::zero() {
                continue;
            }
            let r = self.row(i);
            for p in 0..n {
                let s = wi * r[p];
                if s == T::zero() {
                    continue;
                }
                for q in p..n {
                    g.data[p * n + q] += s * r[q];
                }
            }
        }
        for p in 0..n {
            for q in 0..p {
                g.data[p * n + q] = g.data[q * n + p];
            }
        }
        g
    }

    /// `A diag(w) Aᵀ`
    pub fn weighted_gram_t(&self, w: &[T]) -> Self {
        debug_assert_eq!(w.len(), self.cols);
        let m = self.rows;
        let mut g = Self::zeros(m, m);
        for p in 0..m {
            let rp = self.row(p);
            for q in p..m {
                let rq = self.row(q);
                let v = rp
                    .iter()
                    .zip(rq)
                    .zip(w)
                    .fold(T::zero(), |s, ((&a, &b), &c)| s + a * b * c);
                g.data[p * m + q] = v;
                g.data[q * m + p] = v;
            }
        }
        g
    }

    /// `AᵀA`
    pub fn gram(&self) -> Self {
        self.weighted_gram(&vec![T::one(); self.rows])
    }

    pub fn add_scaled(&mut self, other: &Self, alpha: T) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    pub fn scaled(&self, alpha: T) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    pub fn add_diagonal(&mut self, alpha: T) {
        for i in 0..self.rows.min(self.cols) {
            self[(i, i)] += alpha;
        }
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    l: Matrix<T>,
}

impl<T: Scalar> Cholesky<T> {
    /// Fails with [`Error::RankDeficient`] when a pivot falls below
    /// `rel_pivot_tol · max|diag|`.
    pub fn factor(a: &Matrix<T>, rel_pivot_tol: T) -> Result<Self> {
        let n = a.rows();
        check_dim(n, a.cols())?;
        let diag_max = (0..n).fold(T::zero(), |m, i| m.max(a[(i, i)].abs()));
        let floor = rel_pivot_tol * diag_max.max(T::min_positive_value());
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > floor) {
                return Err(Error::RankDeficient);
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(Self { l })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.l.rows();
        let mut z = b.to_vec();
        for i in 0..n {
            let mut s = z[i];
            for k in 0..i {
                s -= self.l[(i, k)] * z[k];
            }
            z[i] = s / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in (i + 1)..n {
                s -= self.l[(k, i)] * z[k];
            }
            z[i] = s / self.l[(i, i)];
        }
        z
    }

    /// `A⁻¹` column by column.
    pub fn inverse(&self) -> Matrix<T> {
        let n = self.l.rows();
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = T::zero());
            e[j] = T::one();
            let col = self.solve(&e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        inv
    }
}

/// Solves a square system by Gaussian elimination with partial pivoting.
pub fn lu_solve<T: Scalar>(a: &Matrix<T>, b: &[T]) -> Result<Vec<T>> {
    let n = a.rows();
    check_dim(n, a.cols())?;
    check_dim(n, b.len())?;
    let mut m = a.clone();
    let mut rhs = b.to_vec();
    let scale = m.max_abs().max(T::min_positive_value());
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[(i, col)].abs().partial_cmp(&m[(j, col)].abs()).unwrap())
            .unwrap();
        if m[(piv, col)].abs() <= T::epsilon() * scale {
            return Err(Error::RankDeficient);
        }
        if piv != col {
            for j in 0..n {
                let t = m[(col, j)];
                m[(col, j)] = m[(piv, j)];
                m[(piv, j)] = t;
            }
            rhs.swap(col, piv);
        }
        let p = m[(col, col)];
        for i in (col + 1)..n {
            let f = m[(i, col)] / p;
            if f == T::zero() {
                continue;
            }
            for j in col..n {
                let v = m[(col, j)];
                m[(i, j)] -= f * v;
            }
            let v = rhs[col];
            rhs[i] -= f * v;
        }
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = rhs[i];
        for j in (i + 1)..n {
            s -= m[(i, j)] * x[j];
        }
        x[i] = s / m[(i, i)];
    }
    Ok(x)
}

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y)
}

#[inline]
pub fn norm2<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

pub fn norm_inf<T: Scalar>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
}

pub fn sub<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn add<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

pub fn scale<T: Scalar>(a: &[T], s: T) -> Vec<T> {
    a.iter().map(|&x| x * s).collect()
}

/// `y += alpha x`
pub fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `(1 - t) a + t b`
pub fn lerp<T: Scalar>(a: &[T], b: &[T], t: T) -> Vec<T> {
    let s = T::one() - t;
    a.iter().zip(b).map(|(&x, &y)| s * x + t * y).collect()
}

pub fn positive_part<T: Scalar>(a: &[T]) -> Vec<T> {
    a.iter().map(|&v| v.max(T::zero())).collect()
}

/// `log Σ exp(v_i)` with the max shifted out.
pub fn log_sum_exp<T: Scalar>(v: &[T]) -> T {
    let hi = v.iter().fold(T::neg_infinity(), |m, &x| m.max(x));
    if !hi.is_finite() {
        return hi;
    }
    hi + v.iter().map(|&x| (x - hi).exp()).sum::<T>().ln()
}

/// `log Σ w_i exp(v_i)` for nonnegative weights.
pub fn weighted_log_sum_exp<T: Scalar>(w: &[T], v: &[T]) -> T {
    let hi = w
        .iter()
        .zip(v)
        .filter(|(&wi, _)| wi > T::zero())
        .fold(T::neg_infinity(), |m, (_, &x)| m.max(x));
    if !hi.is_finite() {
        return hi;
    }
    hi + w
        .iter()
        .zip(v)
        .map(|(&wi, &x)| if wi > T::zero() { wi * (x - hi).exp() } else { T::zero() })
        .sum::<T>()
        .ln()
}

pub fn dist2<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |s, (&x, &y)| s + (x - y) * (x - y))
        .sqrt()
}
