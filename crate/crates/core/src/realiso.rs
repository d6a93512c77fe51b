//! Real isomorph of complex vectors and matrices.
//!
//! A complex vector `x` of length `r` maps to `[Re x; Im x]` of length `2r`,
//! and a complex `r x s` matrix `X` maps to the block matrix
//!
//! ```text
//! [ Re X  -Im X ]
//! [ Im X   Re X ]
//! ```
//!
//! The map commutes with multiplication, so every solver in the crate works
//! on real data. Note that the l1 norm of the image is `sum |Re x_i| + |Im x_i|`,
//! which is what all l1 problems minimize for complex inputs; it is not the
//! sum of complex moduli.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

pub type ComplexVector<T> = Vec<Complex<T>>;
pub type ComplexMatrix<T> = Matrix<Complex<T>>;

fn finite<T: Scalar>(z: &Complex<T>) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

pub fn vector_to_real<T: Scalar>(v: &[Complex<T>]) -> Result<Vec<T>> {
    if !v.iter().all(finite) {
        return Err(Error::NonFinite("complex vector"));
    }
    Ok(v.iter().map(|z| z.re).chain(v.iter().map(|z| z.im)).collect())
}

pub fn real_to_vector<T: Scalar>(w: &[T]) -> Result<ComplexVector<T>> {
    if !w.len().is_multiple_of(2) {
        return Err(Error::OddLength(w.len()));
    }
    let r = w.len() / 2;
    Ok((0..r).map(|i| Complex::new(w[i], w[r + i])).collect())
}

pub fn matrix_to_real<T: Scalar>(x: &ComplexMatrix<T>) -> Result<Matrix<T>> {
    if !x.is_finite() {
        return Err(Error::NonFinite("complex matrix"));
    }
    let (r, s) = x.shape();
    Ok(Matrix::from_fn(2 * r, 2 * s, |i, j| {
        let z = x[(i % r, j % s)];
        match (i < r, j < s) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    }))
}

/// Embeds a real matrix as a complex one with zero imaginary part.
pub fn complexify<T: Scalar>(x: &Matrix<T>) -> ComplexMatrix<T> {
    x.map(|v| Complex::new(v, T::zero()))
}

pub fn complexify_vector<T: Scalar>(v: &[T]) -> ComplexVector<T> {
    v.iter().map(|&x| Complex::new(x, T::zero())).collect()
}

pub fn complex_norm2<T: Scalar>(v: &[Complex<T>]) -> T {
    v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
}
