//! Dense row-major matrices and the direct factorizations the solvers need
//! (LU with partial pivoting, Cholesky, Householder QR).

use std::ops::{Index, IndexMut};

use num_complex::Complex;
use num_traits::Num;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense matrix stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix<E> {
    rows: usize,
    cols: usize,
    data: Vec<E>,
}

impl<E: Copy + Num> Matrix<E> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![E::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = E::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> E) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<E>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!("{} entries for a {rows}x{cols} matrix", data.len())));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<E>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        let data = rows.iter().flat_map(|row| row.iter().copied()).collect();
        Ok(Self { rows: r, cols: c, data })
    }

    pub fn from_diag(rows: usize, cols: usize, diag: &[E]) -> Self {
        let mut m = Self::zeros(rows, cols);
        for (i, &d) in diag.iter().enumerate().take(rows.min(cols)) {
            m[(i, i)] = d;
        }
        m
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
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[E] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[E] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [E] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<E> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<E>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn map<F: Copy + Num>(&self, f: impl Fn(E) -> F) -> Matrix<F> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| f(x)).collect() }
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o = *o + a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[E]) -> Result<Vec<E>> {
        if self.cols != v.len() {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows).map(|i| self.row(i).iter().zip(v).fold(E::zero(), |acc, (&a, &b)| acc + a * b)).collect())
    }

    /// `self' * v` without forming the transpose.
    pub fn tr_mul_vec(&self, v: &[E]) -> Result<Vec<E>> {
        if self.rows != v.len() {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply transpose of {}x{} by vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let mut out = vec![E::zero(); self.cols];
        for (i, &vi) in v.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o = *o + a * vi;
            }
        }
        Ok(out)
    }

    /// `[self | rhs]`
    pub fn hstack(&self, rhs: &Self) -> Result<Self> {
        if self.rows != rhs.rows {
            return Err(Error::DimensionMismatch(format!("hstack of {} and {} rows", self.rows, rhs.rows)));
        }
        let cols = self.cols + rhs.cols;
        Ok(Self::from_fn(self.rows, cols, |i, j| if j < self.cols { self[(i, j)] } else { rhs[(i, j - self.cols)] }))
    }

    /// `[self; rhs]`
    pub fn vstack(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.cols {
            return Err(Error::DimensionMismatch(format!("vstack of {} and {} columns", self.cols, rhs.cols)));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&rhs.data);
        Ok(Self { rows: self.rows + rhs.rows, cols: self.cols, data })
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        Self::from_fn(idx.len(), self.cols, |i, j| self[(idx[i], j)])
    }

    pub fn select_cols(&self, idx: &[usize]) -> Self {
        Self::from_fn(self.rows, idx.len(), |i, j| self[(i, idx[j])])
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn scale_cols(&self, factors: &[E]) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)] * factors[j])
    }

    pub fn scale_rows(&self, factors: &[E]) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)] * factors[i])
    }
}

impl<E> Index<(usize, usize)> for Matrix<E> {
    type Output = E;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &E {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<E> IndexMut<(usize, usize)> for Matrix<E> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut E {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Scalar> Matrix<T> {
    pub fn frobenius_norm(&self) -> T {
        norm2(&self.data)
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// `self' * self`, exploiting symmetry.
    pub fn gram(&self) -> Self {
        let n = self.cols;
        let mut g = Self::zeros(n, n);
        for i in 0..self.rows {
            let r = self.row(i);
            for a in 0..n {
                let ra = r[a];
                if ra == T::zero() {
                    continue;
                }
                for b in a..n {
                    g[(a, b)] += ra * r[b];
                }
            }
        }
        for a in 0..n {
            for b in 0..a {
                g[(a, b)] = g[(b, a)];
            }
        }
        g
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        if self.shape() != rhs.shape() {
            return Err(Error::DimensionMismatch("matrix difference".into()));
        }
        Ok(Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)] - rhs[(i, j)]))
    }
}

impl<T: Scalar> Matrix<Complex<T>> {
    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Euclidean norm with scaling against overflow.
pub fn norm2<T: Scalar>(v: &[T]) -> T {
    let scale = v.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    if scale == T::zero() || !scale.is_finite() {
        return scale;
    }
    let s: T = v.iter().map(|&x| (x / scale) * (x / scale)).sum();
    scale * s.sqrt()
}

pub fn norm1<T: Scalar>(v: &[T]) -> T {
    v.iter().map(|x| x.abs()).sum()
}

pub fn sub_vec<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Clone, Debug)]
pub struct Lu<T> {
    lu: Matrix<T>,
    perm: Vec<usize>,
    sign: T,
}

impl<T: Scalar> Lu<T> {
    pub fn new(a: &Matrix<T>) -> Result<Self> {
        let n = a.rows();
        if n != a.cols() {
            return Err(Error::DimensionMismatch(format!("LU of {}x{} matrix", n, a.cols())));
        }
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = T::one();
        for k in 0..n {
            let (piv, pmax) =
                (k..n)
                    .map(|i| (i, lu[(i, k)].abs()))
                    .fold((k, T::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax == T::zero() {
                return Err(Error::Singular);
            }
            if piv != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(piv, j)];
                    lu[(piv, j)] = tmp;
                }
                perm.swap(k, piv);
                sign = -sign;
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                if f != T::zero() {
                    for j in k + 1..n {
                        let v = lu[(k, j)];
                        lu[(i, j)] -= f * v;
                    }
                }
            }
        }
        Ok(Self { lu, perm, sign })
    }

    pub fn det(&self) -> T {
        (0..self.lu.rows()).fold(self.sign, |d, i| d * self.lu[(i, i)])
    }

    /// Ratio of the smallest to the largest pivot magnitude; a cheap
    /// singularity indicator.
    pub fn pivot_ratio(&self) -> T {
        let n = self.lu.rows();
        let (lo, hi) = (0..n).fold((T::infinity(), T::zero()), |(lo, hi), i| {
            let d = self.lu[(i, i)].abs();
            (lo.min(d), hi.max(d))
        });
        if hi == T::zero() {
            T::zero()
        } else {
            lo / hi
        }
    }

    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        let n = self.lu.rows();
        if b.len() != n {
            return Err(Error::DimensionMismatch(format!("rhs of length {} for order {n}", b.len())));
        }
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s = (0..i).fold(x[i], |s, j| s - self.lu[(i, j)] * x[j]);
            x[i] = s;
        }
        for i in (0..n).rev() {
            let s = (i + 1..n).fold(x[i], |s, j| s - self.lu[(i, j)] * x[j]);
            x[i] = s / self.lu[(i, i)];
        }
        Ok(x)
    }

    pub fn solve_matrix(&self, b: &Matrix<T>) -> Result<Matrix<T>> {
        let mut out = Matrix::zeros(b.rows(), b.cols());
        for j in 0..b.cols() {
            let x = self.solve(&b.col(j))?;
            for (i, v) in x.into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        Ok(out)
    }

    pub fn inverse(&self) -> Result<Matrix<T>> {
        self.solve_matrix(&Matrix::identity(self.lu.rows()))
    }
}

/// Cholesky factorization `A = L L'` of a symmetric positive definite matrix.
#[derive(Clone, Debug)]
pub struct Cholesky<T> {
    l: Matrix<T>,
}

impl<T: Scalar> Cholesky<T> {
    pub fn new(a: &Matrix<T>) -> Result<Self> {
        let n = a.rows();
        if n != a.cols() {
            return Err(Error::DimensionMismatch("Cholesky of non-square matrix".into()));
        }
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > T::zero()) {
                return Err(Error::Singular);
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            for i in j + 1..n {
                let mut s = a[(i, j)];
                let (ri, rj) = (l.row(i), l.row(j));
                for k in 0..j {
                    s -= ri[k] * rj[k];
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(Self { l })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.l.rows();
        let mut y = b.to_vec();
        for i in 0..n {
            let row = self.l.row(i);
            let mut s = y[i];
            for k in 0..i {
                s -= row[k] * y[k];
            }
            y[i] = s / row[i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.l[(k, i)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        y
    }
}

/// Householder QR, optionally with column pivoting.
///
/// Reflectors are kept in compact form below the diagonal of `qr`; `tau`
/// holds their scalar factors.
#[derive(Clone, Debug)]
pub struct Qr<T> {
    qr: Matrix<T>,
    tau: Vec<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> Qr<T> {
    pub fn new(a: &Matrix<T>) -> Self {
        Self::factor(a, false)
    }

    /// QR with column pivoting: `A P = Q R` with `|R_kk|` nonincreasing.
    pub fn with_pivoting(a: &Matrix<T>) -> Self {
        Self::factor(a, true)
    }

    fn factor(a: &Matrix<T>, pivot: bool) -> Self {
        let (m, n) = a.shape();
        let mut qr = a.clone();
        let steps = m.min(n);
        let mut tau = vec![T::zero(); steps];
        let mut perm: Vec<usize> = (0..n).collect();
        let mut col_norms: Vec<T> = (0..n).map(|j| norm2(&qr.col(j))).collect();
        for k in 0..steps {
            if pivot {
                let best = (k..n).fold(k, |b, j| if col_norms[j] > col_norms[b] { j } else { b });
                if best != k {
                    for i in 0..m {
                        let t = qr[(i, k)];
                        qr[(i, k)] = qr[(i, best)];
                        qr[(i, best)] = t;
                    }
                    perm.swap(k, best);
                    col_norms.swap(k, best);
                }
            }
            let x: Vec<T> = (k..m).map(|i| qr[(i, k)]).collect();
            let alpha = norm2(&x);
            if alpha == T::zero() {
                tau[k] = T::zero();
                continue;
            }
            let beta = if x[0] >= T::zero() { -alpha } else { alpha };
            // v = x - beta e1, normalized so v[0] = 1
            let v0 = x[0] - beta;
            tau[k] = (beta - x[0]) / beta;
            qr[(k, k)] = beta;
            for i in k + 1..m {
                qr[(i, k)] /= v0;
            }
            for j in k + 1..n {
                let mut s = qr[(k, j)];
                for i in k + 1..m {
                    s += qr[(i, k)] * qr[(i, j)];
                }
                s *= tau[k];
                qr[(k, j)] -= s;
                for i in k + 1..m {
                    let vik = qr[(i, k)];
                    qr[(i, j)] -= s * vik;
                }
            }
            if pivot {
                for j in k + 1..n {
                    let tail: Vec<T> = (k + 1..m).map(|i| qr[(i, j)]).collect();
                    col_norms[j] = norm2(&tail);
                }
            }
        }
        Self { qr, tau, perm }
    }

    /// Column permutation: column `k` of `A P` is column `perm[k]` of `A`.
    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn r(&self) -> Matrix<T> {
        let (m, n) = self.qr.shape();
        Matrix::from_fn(m.min(n), n, |i, j| if j >= i { self.qr[(i, j)] } else { T::zero() })
    }

    /// Applies `Q'` to `b` in place.
    pub fn apply_qt(&self, b: &mut [T]) {
        let m = self.qr.rows();
        for k in 0..self.tau.len() {
            if self.tau[k] == T::zero() {
                continue;
            }
            let mut s = b[k];
            for i in k + 1..m {
                s += self.qr[(i, k)] * b[i];
            }
            s *= self.tau[k];
            b[k] -= s;
            for i in k + 1..m {
                b[i] -= s * self.qr[(i, k)];
            }
        }
    }

    /// Applies `Q` to `b` in place.
    pub fn apply_q(&self, b: &mut [T]) {
        let m = self.qr.rows();
        for k in (0..self.tau.len()).rev() {
            if self.tau[k] == T::zero() {
                continue;
            }
            let mut s = b[k];
            for i in k + 1..m {
                s += self.qr[(i, k)] * b[i];
            }
            s *= self.tau[k];
            b[k] -= s;
            for i in k + 1..m {
                b[i] -= s * self.qr[(i, k)];
            }
        }
    }

    /// Full orthogonal factor, `m x m`.
    pub fn q_full(&self) -> Matrix<T> {
        let m = self.qr.rows();
        let mut q = Matrix::zeros(m, m);
        for j in 0..m {
            let mut e = vec![T::zero(); m];
            e[j] = T::one();
            self.apply_q(&mut e);
            for i in 0..m {
                q[(i, j)] = e[i];
            }
        }
        q
    }

    /// Least-squares solution of `A x ~ b` for a full-column-rank `A`.
    pub fn solve_least_squares(&self, b: &[T]) -> Result<Vec<T>> {
        let (m, n) = self.qr.shape();
        if b.len() != m {
            return Err(Error::DimensionMismatch(format!("rhs of length {} for {m} rows", b.len())));
        }
        if m < n {
            return Err(Error::DimensionMismatch("least squares needs rows >= cols".into()));
        }
        let mut y = b.to_vec();
        self.apply_qt(&mut y);
        let mut x = vec![T::zero(); n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in i + 1..n {
                s -= self.qr[(i, j)] * x[j];
            }
            let d = self.qr[(i, i)];
            if d == T::zero() {
                return Err(Error::Singular);
            }
            x[i] = s / d;
        }
        let mut out = vec![T::zero(); n];
        for (k, &p) in self.perm.iter().enumerate() {
            out[p] = x[k];
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sample() -> Matrix<f64> {
        Matrix::from_rows(&[vec![4.0, -2.0, 1.0], vec![3.0, 6.0, -4.0], vec![2.0, 1.0, 8.0], vec![1.0, 1.0, 1.0]])
            .unwrap()
    }

    #[test]
    fn lu_solves_and_inverts() {
        let a = sample().block(0, 0, 3, 3);
        let lu = Lu::new(&a).unwrap();
        let x = lu.solve(&[1.0, 2.0, 3.0]).unwrap();
        let back = a.mul_vec(&x).unwrap();
        for (b, e) in back.iter().zip([1.0, 2.0, 3.0]) {
            assert_abs_diff_eq!(*b, e, epsilon = 1e-12);
        }
        let inv = lu.inverse().unwrap();
        let id = a.matmul(&inv).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(id[(i, j)], if i == j { 1.0 } else { 0.0 }, epsilon = 1e-12);
            }
        }
        // det by cofactor expansion
        let det = 4.0 * (6.0 * 8.0 + 4.0) + 2.0 * (3.0 * 8.0 + 8.0) + (3.0 - 12.0);
        assert_abs_diff_eq!(lu.det(), det, epsilon = 1e-10);
    }

    #[test]
    fn lu_rejects_singular() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert_eq!(Lu::new(&a).unwrap_err(), Error::Singular);
    }

    #[test]
    fn cholesky_matches_lu() {
        let a = sample();
        let g = a.gram();
        let ch = Cholesky::new(&g).unwrap();
        let b = [1.0, -1.0, 0.5];
        let x1 = ch.solve(&b);
        let x2 = Lu::new(&g).unwrap().solve(&b).unwrap();
        for (u, v) in x1.iter().zip(&x2) {
            assert_abs_diff_eq!(u, v, epsilon = 1e-12);
        }
    }

    #[test]
    fn qr_reconstructs_and_q_is_orthogonal() {
        let a = sample();
        for qr in [Qr::new(&a), Qr::with_pivoting(&a)] {
            let q = qr.q_full();
            let qtq = q.transpose().matmul(&q).unwrap();
            for i in 0..4 {
                for j in 0..4 {
                    assert_abs_diff_eq!(qtq[(i, j)], if i == j { 1.0 } else { 0.0 }, epsilon = 1e-12);
                }
            }
            let r = qr.r();
            let mut r_full = Matrix::zeros(4, 3);
            for i in 0..3 {
                for j in 0..3 {
                    r_full[(i, j)] = r[(i, j)];
                }
            }
            let ap = q.matmul(&r_full).unwrap();
            let perm = qr.permutation();
            for i in 0..4 {
                for k in 0..3 {
                    assert_abs_diff_eq!(ap[(i, k)], a[(i, perm[k])], epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn least_squares_residual_is_orthogonal() {
        let a = sample();
        let b = [1.0, 0.0, -2.0, 5.0];
        let x = Qr::new(&a).solve_least_squares(&b).unwrap();
        let r = sub_vec(&b, &a.mul_vec(&x).unwrap());
        let at_r = a.tr_mul_vec(&r).unwrap();
        assert!(norm2(&at_r) < 1e-12);
    }
}
