//! Factorizations of the design matrices and the structured matrix builders
//! used by the experiments.
//!
//! Conventions:
//!
//! * [`svd`] returns `V = U1 * D * U2` with `D = [diag(c); 0]` and
//!   `c_1 >= ... >= c_p`. Rows of `U2` are the right singular vectors.
//! * [`gsvd`] returns `V = X * A * U1`, `Ve = X * B * U2` where
//!   `A = [0_{(n-p) x p}; diag(alpha)]` has its zero block on top and
//!   `B = [I_{n-p} 0 0; 0 diag(beta) 0]`. The alphas are nondecreasing and
//!   the betas nonincreasing. Relative to the SVD layout the paired rows are
//!   moved to the bottom and reversed, so paired index `j` of the GSVD
//!   corresponds to singular index `p - 1 - j` when `Ve` is built from the
//!   left singular vectors of `V`.

use std::f64::consts::PI;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Qr};
use crate::realiso::{ComplexMatrix, ComplexVector};
use crate::scalar::Scalar;

/// Numeric rank rule: a singular value counts when it exceeds this fraction
/// of the largest one.
pub const RANK_TOL: f64 = 1e-10;

/// `|alpha_j - beta_j|` below this is treated as a tie (`alpha_j = beta_j`).
pub const TIE_TOL: f64 = 1e-10;

const MAX_SWEEPS: usize = 80;

#[derive(Clone, Debug)]
pub struct SvdFactors<T> {
    /// `n x n` orthogonal.
    pub u1: Matrix<T>,
    /// Nonincreasing.
    pub singular_values: Vec<T>,
    /// `p x p` orthogonal; row `k` is the `k`-th right singular vector.
    pub u2: Matrix<T>,
}

impl<T: Scalar> SvdFactors<T> {
    /// `U1 * D * U2`.
    pub fn reconstruct(&self) -> Matrix<T> {
        let n = self.u1.rows();
        let p = self.u2.rows();
        let d = Matrix::from_diag(n, p, &self.singular_values);
        self.u1.matmul(&d).and_then(|ud| ud.matmul(&self.u2)).expect("conformable factors")
    }

    pub fn condition_number(&self) -> T {
        let hi = self.singular_values.first().copied().unwrap_or_else(T::zero);
        let lo = self.singular_values.last().copied().unwrap_or_else(T::zero);
        hi / lo
    }

    pub fn has_full_rank(&self) -> bool {
        full_rank(&self.singular_values)
    }
}

fn full_rank<T: Scalar>(sv: &[T]) -> bool {
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) => hi > T::zero() && lo > T::lit(RANK_TOL) * hi,
        _ => true,
    }
}

/// Completes `k` orthonormal columns of an `n x k` matrix to an `n x n`
/// orthogonal matrix; the given columns are kept verbatim.
fn complete_basis<T: Scalar>(thin: &Matrix<T>) -> Matrix<T> {
    let (n, k) = thin.shape();
    let q = Qr::new(thin).q_full();
    Matrix::from_fn(n, n, |i, j| if j < k { thin[(i, j)] } else { q[(i, j)] })
}

/// Singular value decomposition by one-sided (Hestenes) Jacobi rotations.
pub fn svd<T: Scalar>(v: &Matrix<T>) -> Result<SvdFactors<T>> {
    let (n, p) = v.shape();
    if n < p {
        return Err(Error::DimensionMismatch(format!("svd needs rows >= cols, got {n}x{p}")));
    }
    if !v.is_finite() {
        return Err(Error::NonFinite("svd input"));
    }
    // Work on rows of V' (= columns of V) for contiguous access.
    let mut w = v.transpose();
    let mut vt = Matrix::<T>::identity(p);
    let eps = T::epsilon();
    let mut converged = p < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for i in 0..p {
            for j in i + 1..p {
                let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
                for (&a, &b) in w.row(i).iter().zip(w.row(j)) {
                    alpha += a * a;
                    beta += b * b;
                    gamma += a * b;
                }
                if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let sgn = if zeta >= T::zero() { T::one() } else { -T::one() };
                let t = sgn / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate_rows(&mut w, i, j, c, s);
                rotate_rows(&mut vt, i, j, c, s);
            }
        }
        converged = !rotated;
    }
    if !converged {
        return Err(Error::MaxIterations(MAX_SWEEPS));
    }
    let norms: Vec<T> = (0..p).map(|k| crate::linalg::norm2(w.row(k))).collect();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).expect("finite norms"));
    let singular_values: Vec<T> = order.iter().map(|&k| norms[k]).collect();
    let u2 = vt.select_rows(&order);

    let smax = singular_values.first().copied().unwrap_or_else(T::zero);
    let cutoff = smax * eps * T::from_usize_lossy(n.max(1));
    let rank = singular_values.iter().take_while(|&&s| s > cutoff && s > T::zero()).count();
    let thin = Matrix::from_fn(n, rank, |i, k| w[(order[k], i)] / singular_values[k]);
    let u1 = complete_basis(&thin);
    Ok(SvdFactors { u1, singular_values, u2 })
}

fn rotate_rows<T: Scalar>(m: &mut Matrix<T>, i: usize, j: usize, c: T, s: T) {
    for k in 0..m.cols() {
        let a = m[(i, k)];
        let b = m[(j, k)];
        m[(i, k)] = c * a - s * b;
        m[(j, k)] = s * a + c * b;
    }
}

/// Generalized singular value decomposition of a pair `(V, Ve)`.
#[derive(Clone, Debug)]
pub struct GsvdFactors<T> {
    /// `n x n` invertible.
    pub x: Matrix<T>,
    /// Inverse of `x`, assembled from the orthogonal and diagonal pieces.
    pub x_inv: Matrix<T>,
    /// Nondecreasing, in `[0, 1]`.
    pub alphas: Vec<T>,
    /// Nonincreasing, in `[0, 1]`.
    pub betas: Vec<T>,
    /// `p x p` orthogonal.
    pub u1: Matrix<T>,
    /// `(m-p) x (m-p)` orthogonal.
    pub u2: Matrix<T>,
    /// Number of pairs with `alpha_j > beta_j`.
    pub q: usize,
}

impl<T: Scalar> GsvdFactors<T> {
    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn p(&self) -> usize {
        self.alphas.len()
    }

    pub fn noise_dim(&self) -> usize {
        self.u2.rows()
    }

    /// `beta_j / alpha_j` in paired order (nonincreasing).
    pub fn ratios(&self) -> Vec<T> {
        self.alphas.iter().zip(&self.betas).map(|(&a, &b)| b / a).collect()
    }

    /// The `n x p` matrix with zero block on top and `diag(alpha)` below.
    pub fn a_matrix(&self) -> Matrix<T> {
        let (n, p) = (self.n(), self.p());
        Matrix::from_fn(n, p, |i, j| if i >= n - p && i - (n - p) == j { self.alphas[j] } else { T::zero() })
    }

    /// The `n x (m-p)` matrix `[I 0 0; 0 diag(beta) 0]`.
    pub fn b_matrix(&self) -> Matrix<T> {
        let (n, p, w) = (self.n(), self.p(), self.noise_dim());
        Matrix::from_fn(n, w, |i, j| {
            if i != j {
                T::zero()
            } else if i < n - p {
                T::one()
            } else {
                self.betas[i - (n - p)]
            }
        })
    }

    pub fn reconstruct_v(&self) -> Matrix<T> {
        self.x.matmul(&self.a_matrix()).and_then(|m| m.matmul(&self.u1)).expect("conformable")
    }

    pub fn reconstruct_ve(&self) -> Matrix<T> {
        self.x.matmul(&self.b_matrix()).and_then(|m| m.matmul(&self.u2)).expect("conformable")
    }

    /// `X^{-1} d`.
    pub fn transform_data(&self, d: &[T]) -> Result<Vec<T>> {
        self.x_inv.mul_vec(d)
    }

    /// `U1 xi`, the parameters in transformed coordinates.
    pub fn transform_params(&self, xi: &[T]) -> Result<Vec<T>> {
        self.u1.mul_vec(xi)
    }

    /// `U1' xi_tilde`, back to original coordinates.
    pub fn untransform_params(&self, xi_tilde: &[T]) -> Result<Vec<T>> {
        self.u1.tr_mul_vec(xi_tilde)
    }
}

/// Counts pairs with `alpha_j > beta_j` beyond the tie tolerance.
pub fn count_dominant<T: Scalar>(alphas: &[T], betas: &[T]) -> usize {
    alphas.iter().zip(betas).filter(|(&a, &b)| a - b > T::lit(TIE_TOL)).count()
}

/// GSVD of `(V, Ve)` with `V` of full column rank `p` and `Ve` of full row
/// rank `n`, `Ve` having at least `n` columns.
///
/// Route: `Ve = G [I 0] W'` from the SVD of `Ve` (`G = P * Sigma`), then the
/// SVD of `G^{-1} V` supplies the generalized singular values and `U1`; a
/// diagonal rescaling of `X` enforces `alpha_j^2 + beta_j^2 = 1`.
pub fn gsvd<T: Scalar>(v: &Matrix<T>, ve: &Matrix<T>) -> Result<GsvdFactors<T>> {
    let (n, p) = v.shape();
    let w = ve.cols();
    if ve.rows() != n {
        return Err(Error::DimensionMismatch(format!("V has {n} rows, Ve has {}", ve.rows())));
    }
    if n < p || p == 0 {
        return Err(Error::DimensionMismatch(format!("need n >= p >= 1, got n={n}, p={p}")));
    }
    if w < n {
        return Err(Error::NoiseBasisTooNarrow { rows: n, cols: w });
    }
    let sv = svd(v)?;
    if !sv.has_full_rank() {
        return Err(Error::RankDeficient(format!(
            "smallest singular value {} of V is below {RANK_TOL} x largest",
            sv.singular_values[p - 1]
        )));
    }
    // Ve' = U1w * [Sigma; 0] * U2w  =>  Ve = U2w' [Sigma 0] U1w'
    let svt = svd(&ve.transpose())?;
    if !svt.has_full_rank() {
        return Err(Error::BetaZero(format!(
            "smallest singular value {} of Ve",
            svt.singular_values.last().copied().unwrap_or_else(T::zero)
        )));
    }
    let sigma = &svt.singular_values;
    let g_inv = svt.u2.scale_rows(&sigma.iter().map(|&s| T::one() / s).collect::<Vec<_>>());
    let g = svt.u2.transpose().scale_cols(sigma);
    let m = g_inv.matmul(v)?;
    let msv = svd(&m)?;
    // Reorder so the paired block sits at the bottom with ascending ratios.
    let col_order: Vec<usize> = (p..n).chain((0..p).rev()).collect();
    let y_hat = msv.u1.select_cols(&col_order);
    let s_asc: Vec<T> = msv.singular_values.iter().rev().copied().collect();
    let u1 = msv.u2.select_rows(&(0..p).rev().collect::<Vec<_>>());

    let scale: Vec<T> =
        (0..n).map(|i| if i < n - p { T::one() } else { (T::one() + s_asc[i - (n - p)].powi(2)).sqrt() }).collect();
    let alphas: Vec<T> = s_asc.iter().zip(&scale[n - p..]).map(|(&s, &nrm)| s / nrm).collect();
    let betas: Vec<T> = scale[n - p..].iter().map(|&nrm| T::one() / nrm).collect();

    let x = g.matmul(&y_hat)?.scale_cols(&scale);
    let inv_scale: Vec<T> = scale.iter().map(|&s| T::one() / s).collect();
    let x_inv = y_hat.transpose().matmul(&g_inv)?.scale_rows(&inv_scale);

    // U2 = blockdiag(Y_hat', I) * U1w'
    let u1w_t = svt.u1.transpose();
    let mut block = Matrix::<T>::identity(w);
    for i in 0..n {
        for j in 0..n {
            block[(i, j)] = y_hat[(j, i)];
        }
    }
    let u2 = block.matmul(&u1w_t)?;
    let q = count_dominant(&alphas, &betas);
    Ok(GsvdFactors { x, x_inv, alphas, betas, u1, u2, q })
}

/// `V(k, h) = z_h^k` for `k = 0..n`.
pub fn vandermonde<T: Scalar>(z: &[Complex<T>], n: usize) -> ComplexMatrix<T> {
    Matrix::from_fn(n, z.len(), |k, h| z[h].powi(k as i32))
}

/// `Ve(k, h) = exp(2 pi i k h / w)` for `k = 0..n`, `h = 0..w`.
pub fn fourier_basis<T: Scalar>(n: usize, w: usize) -> Result<ComplexMatrix<T>> {
    if w < n {
        log::warn!("Fourier noise basis with {w} < {n} columns violates m - p >= n");
        return Err(Error::NoiseBasisTooNarrow { rows: n, cols: w });
    }
    Ok(Matrix::from_fn(n, w, |k, h| {
        let theta = 2.0 * PI * ((k * h) % w) as f64 / w as f64;
        Complex::new(T::lit(theta.cos()), T::lit(theta.sin()))
    }))
}

/// Scales every column of `a` to unit l2 norm. Returns the scaled matrix and
/// the diagonal `D` with `D_j = 1 / ||a e_j||`, so that `scaled = a * D`.
pub fn column_scale<T: Scalar>(a: &ComplexMatrix<T>) -> Result<(ComplexMatrix<T>, Vec<T>)> {
    let (rows, cols) = a.shape();
    let mut d = Vec::with_capacity(cols);
    for j in 0..cols {
        let nrm = (0..rows).map(|i| a[(i, j)].norm_sqr()).sum::<T>().sqrt();
        if nrm == T::zero() {
            return Err(Error::ZeroColumn(j));
        }
        d.push(T::one() / nrm);
    }
    let scaled = Matrix::from_fn(rows, cols, |i, j| a[(i, j)] * d[j]);
    Ok((scaled, d))
}

/// Builds a square noise basis `Ve` such that the GSVD of `(V, Ve)` has the
/// requested ratios `beta_j / alpha_j`.
///
/// `target_ratios` is given in paired order, so it must be nonincreasing.
/// The largest ratio is attached to the smallest singular direction of `V`.
/// With `V = U1 D U2`, the result is `Ve = U1 diag(e)` where
/// `e_k = c_k * ratio` on the singular directions and `1` on the complement.
pub fn design_noise_basis<T: Scalar>(v: &Matrix<T>, target_ratios: &[T]) -> Result<Matrix<T>> {
    let (n, p) = v.shape();
    if target_ratios.len() != p {
        return Err(Error::DimensionMismatch(format!("{} ratios for {p} parameters", target_ratios.len())));
    }
    if target_ratios.iter().any(|r| !r.is_finite() || *r <= T::zero()) {
        return Err(Error::InvalidInput("ratios must be finite and positive".into()));
    }
    if let Some(k) = target_ratios.windows(2).position(|w| w[1] > w[0]) {
        return Err(Error::InfeasibleOrdering(format!(
            "ratio {} at position {} exceeds ratio {} before it; paired alphas are nondecreasing \
             and betas nonincreasing, so beta/alpha must be nonincreasing",
            target_ratios[k + 1],
            k + 1,
            target_ratios[k]
        )));
    }
    let sv = svd(v)?;
    if !sv.has_full_rank() {
        return Err(Error::RankDeficient("V must have full column rank".into()));
    }
    let e: Vec<T> =
        (0..n).map(|k| if k < p { sv.singular_values[k] * target_ratios[p - 1 - k] } else { T::one() }).collect();
    Ok(sv.u1.scale_cols(&e))
}

/// Ratios for the low-bias design: `beta_1 = alpha_1` and `beta_j = eps` for
/// `j >= 2`, which gives `q = p - 1`. Requires `0 < eps < 1/sqrt(2)`.
pub fn low_bias_ratios<T: Scalar>(p: usize, eps: T) -> Result<Vec<T>> {
    let half = T::lit(0.5).sqrt();
    if !(eps > T::zero() && eps < half) {
        return Err(Error::InvalidInput(format!("eps must lie in (0, 1/sqrt 2), got {eps}")));
    }
    let small = eps / (T::one() - eps * eps).sqrt();
    Ok((0..p).map(|j| if j == 0 { T::one() } else { small }).collect())
}

/// Ratios that make `sum_{j <= p-q} beta_j^2 / alpha_j^2 = tau_b / sigma2`
/// with the shrunk block sharing one ratio and the kept block using
/// `kept_ratio < 1`.
pub fn bound_calibrated_ratios<T: Scalar>(p: usize, q: usize, tau_b: T, sigma2: T, kept_ratio: T) -> Result<Vec<T>> {
    if q >= p {
        return Err(Error::InvalidInput(format!("need q < p, got q={q}, p={p}")));
    }
    if !(kept_ratio > T::zero() && kept_ratio < T::one()) {
        return Err(Error::InvalidInput("kept ratio must lie in (0, 1)".into()));
    }
    let per = tau_b / (sigma2 * T::from_usize_lossy(p - q));
    let r = per.sqrt();
    if !(r >= T::one()) {
        return Err(Error::InfeasibleOrdering(format!(
            "tau_b / sigma2 = {} gives shrunk ratio {r} < 1, but shrunk pairs need beta >= alpha",
            tau_b / sigma2
        )));
    }
    Ok((0..p).map(|j| if j < p - q { r } else { kept_ratio }).collect())
}

/// Convenience: `V` with orthonormal columns `e_1..e_p` of `I_n`.
pub fn leading_identity<T: Scalar>(n: usize, p: usize) -> Matrix<T> {
    Matrix::from_fn(n, p, |i, j| if i == j { T::one() } else { T::zero() })
}

/// Nodes of the shipped exponential experiment, in listed order.
pub fn experiment_nodes() -> ComplexVector<f64> {
    [(-0.3, -0.35), (-0.1, -0.3), (-0.05, -0.28), (-0.0001, 0.2), (-0.0001, 0.21)]
        .iter()
        .map(|&(decay, freq)| Complex::new(decay, 2.0 * PI * freq).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Lu;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix<f64> {
        Matrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    fn orthogonality_error(q: &Matrix<f64>) -> f64 {
        let qtq = q.transpose().matmul(q).unwrap();
        qtq.sub(&Matrix::identity(q.cols())).unwrap().max_abs()
    }

    /// Two-sided cyclic Jacobi eigenvalues of a symmetric matrix.
    fn jacobi_eigenvalues(mut a: Matrix<f64>) -> Vec<f64> {
        let n = a.rows();
        for _ in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .filter(|(i, j)| i != j)
                .map(|(i, j)| a[(i, j)].powi(2))
                .sum();
            if off < 1e-26 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    if a[(p, q)].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let (akp, akq) = (a[(k, p)], a[(k, q)]);
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut ev: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
        ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
        ev
    }

    #[test]
    fn svd_identity_and_diagonal() {
        let s = svd(&Matrix::<f64>::identity(3)).unwrap();
        assert_eq!(s.singular_values, vec![1.0, 1.0, 1.0]);
        let d = Matrix::from_diag(4, 2, &[3.0, 2.0]);
        let s = svd(&d).unwrap();
        assert_abs_diff_eq!(s.singular_values[0], 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.singular_values[1], 2.0, epsilon = 1e-14);
        let d = Matrix::from_diag(4, 2, &[2.0, 3.0]);
        assert_abs_diff_eq!(svd(&d).unwrap().singular_values[0], 3.0, epsilon = 1e-14);
    }

    #[test]
    fn svd_matches_eigen_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let v = random_matrix(&mut rng, 8, 3);
            let s = svd(&v).unwrap();
            let ev = jacobi_eigenvalues(v.gram());
            for (c, e) in s.singular_values.iter().zip(&ev) {
                assert_abs_diff_eq!(*c, e.sqrt(), epsilon = 1e-8);
            }
            assert!(orthogonality_error(&s.u1) < 1e-10);
            assert!(orthogonality_error(&s.u2) < 1e-10);
            let rel = s.reconstruct().sub(&v).unwrap().frobenius_norm() / v.frobenius_norm();
            assert!(rel < 1e-10, "reconstruction {rel}");
            assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn svd_rejects_wide_input_and_handles_rank_deficiency() {
        assert!(matches!(svd(&Matrix::<f64>::zeros(2, 3)), Err(Error::DimensionMismatch(_))));
        let v = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]]).unwrap();
        let s = svd(&v).unwrap();
        assert!(!s.has_full_rank());
        assert!(orthogonality_error(&s.u1) < 1e-12);
        assert!(s.reconstruct().sub(&v).unwrap().max_abs() < 1e-12);
    }

    fn check_gsvd(v: &Matrix<f64>, ve: &Matrix<f64>, g: &GsvdFactors<f64>) {
        let rv = g.reconstruct_v().sub(v).unwrap().frobenius_norm() / v.frobenius_norm();
        let re = g.reconstruct_ve().sub(ve).unwrap().frobenius_norm() / ve.frobenius_norm();
        assert!(rv < 1e-8 && re < 1e-8, "reconstruction {rv} {re}");
        for (a, b) in g.alphas.iter().zip(&g.betas) {
            assert_abs_diff_eq!(a * a + b * b, 1.0, epsilon = 1e-10);
        }
        assert!(g.alphas.windows(2).all(|w| w[0] <= w[1]));
        assert!(g.betas.windows(2).all(|w| w[0] >= w[1]));
        assert!(orthogonality_error(&g.u1) < 1e-10);
        assert!(orthogonality_error(&g.u2) < 1e-10);
        let xx = g.x.matmul(&g.x_inv).unwrap();
        assert!(xx.sub(&Matrix::identity(g.n())).unwrap().max_abs() < 1e-8);
        // A'A + B'B = I on the n structured rows
        let a = g.a_matrix();
        let b = g.b_matrix();
        let aat = a.matmul(&a.transpose()).unwrap();
        let bbt = b.matmul(&b.transpose()).unwrap();
        let sum = Matrix::from_fn(g.n(), g.n(), |i, j| aat[(i, j)] + bbt[(i, j)]);
        assert!(sum.sub(&Matrix::identity(g.n())).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn gsvd_identity_pair() {
        let (n, p) = (5, 2);
        let v = leading_identity::<f64>(n, p);
        let ve = Matrix::identity(n);
        let g = gsvd(&v, &ve).unwrap();
        check_gsvd(&v, &ve, &g);
        for (a, b) in g.alphas.iter().zip(&g.betas) {
            assert_abs_diff_eq!(*a, 0.5f64.sqrt(), epsilon = 1e-12);
            assert_abs_diff_eq!(*b, 0.5f64.sqrt(), epsilon = 1e-12);
        }
        assert_eq!(g.q, 0);
    }

    #[test]
    fn gsvd_with_left_singular_basis_recovers_singular_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (n, p) = (6, 2);
        let q = svd(&random_matrix(&mut rng, n, n)).unwrap().u1;
        let r = svd(&random_matrix(&mut rng, p, p)).unwrap().u1;
        let v = q.matmul(&Matrix::from_diag(n, p, &[2.0, 0.5])).unwrap().matmul(&r).unwrap();
        let ve = svd(&v).unwrap().u1;
        let g = gsvd(&v, &ve).unwrap();
        check_gsvd(&v, &ve, &g);
        let ab: Vec<f64> = g.alphas.iter().zip(&g.betas).map(|(a, b)| a / b).collect();
        assert_abs_diff_eq!(ab[0], 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(ab[1], 2.0, epsilon = 1e-10);
        assert_eq!(g.q, 1);
    }

    #[test]
    fn gsvd_random_pairs_and_rotation_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let n = rng.random_range(2..10);
            let p = rng.random_range(1..=n);
            let w = n + rng.random_range(0..5);
            let v = random_matrix(&mut rng, n, p);
            let ve = random_matrix(&mut rng, n, w);
            let g = gsvd(&v, &ve).unwrap();
            check_gsvd(&v, &ve, &g);
            let rot = svd(&random_matrix(&mut rng, w, w)).unwrap().u1;
            let g2 = gsvd(&v, &ve.matmul(&rot).unwrap()).unwrap();
            for (a, b) in g.ratios().iter().zip(g2.ratios()) {
                assert!((a - b).abs() <= 1e-8 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn gsvd_error_regimes() {
        let v = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(gsvd(&v, &Matrix::identity(3)), Err(Error::RankDeficient(_))));
        let v = leading_identity::<f64>(3, 2);
        let mut ve = Matrix::identity(3);
        ve[(2, 2)] = 0.0;
        assert!(matches!(gsvd(&v, &ve), Err(Error::BetaZero(_))));
        assert!(matches!(gsvd(&v, &Matrix::identity(3).block(0, 0, 3, 2)), Err(Error::NoiseBasisTooNarrow { .. })));
    }

    #[test]
    fn vandermonde_examples() {
        let one = Complex::new(1.0, 0.0);
        let v = vandermonde(&[one], 3);
        assert_eq!(v.col(0), vec![one; 3]);
        let v = vandermonde(&[Complex::new(2.0, 0.0), Complex::new(-1.0, 0.0)], 3);
        let re: Vec<Vec<f64>> = v.to_rows().iter().map(|r| r.iter().map(|z| z.re).collect()).collect();
        assert_eq!(re, vec![vec![1.0, 1.0], vec![2.0, -1.0], vec![4.0, 1.0]]);
        let z = experiment_nodes();
        let v = vandermonde(&z, 40);
        for k in 0..40 {
            for h in 0..5 {
                let direct = (Complex::new(k as f64, 0.0) * z[h].ln()).exp();
                assert!((v[(k, h)] - direct).norm() < 1e-13);
            }
        }
        let cond = svd(&crate::realiso::matrix_to_real(&v).unwrap()).unwrap().condition_number();
        log::info!("condition number of the 40-row experiment Vandermonde matrix: {cond}");
        assert!(cond.is_finite() && cond > 1.0);
    }

    #[test]
    fn fourier_examples() {
        let f = fourier_basis::<f64>(1, 1).unwrap();
        assert_eq!(f[(0, 0)], Complex::new(1.0, 0.0));
        let f = fourier_basis::<f64>(2, 2).unwrap();
        assert!((f[(1, 1)] - Complex::new(-1.0, 0.0)).norm() < 1e-15);
        assert!((f[(0, 1)] - Complex::new(1.0, 0.0)).norm() < 1e-15);
        let f = fourier_basis::<f64>(4, 8).unwrap();
        for j in 0..8 {
            let n2: f64 = f.col(j).iter().map(|z| z.norm_sqr()).sum();
            assert_abs_diff_eq!(n2, 4.0, epsilon = 1e-13);
            for k in 0..4 {
                let direct = Complex::new(0.0, 2.0 * PI * (k * j) as f64 / 8.0).exp();
                assert!((f[(k, j)] - direct).norm() < 1e-13);
            }
        }
        assert!(matches!(fourier_basis::<f64>(3, 2), Err(Error::NoiseBasisTooNarrow { rows: 3, cols: 2 })));
    }

    #[test]
    fn column_scale_examples() {
        let c = |x: f64| Complex::new(x, 0.0);
        let a = Matrix::from_rows(&[vec![c(2.0), c(0.0)], vec![c(0.0), c(4.0)]]).unwrap();
        let (s, d) = column_scale(&a).unwrap();
        assert_eq!(s, Matrix::identity(2));
        assert_eq!(d, vec![0.5, 0.25]);
        let a = Matrix::from_rows(&[vec![c(3.0)], vec![c(4.0)]]).unwrap();
        let (s, d) = column_scale(&a).unwrap();
        assert_abs_diff_eq!(s[(0, 0)].re, 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(s[(1, 0)].re, 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(d[0], 0.2, epsilon = 1e-15);
        let a = Matrix::from_rows(&[vec![c(1.0), c(0.0)], vec![c(1.0), c(0.0)]]).unwrap();
        assert_eq!(column_scale(&a).unwrap_err(), Error::ZeroColumn(1));

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = Matrix::from_fn(6, 4, |_, _| Complex::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)));
        let (s, d) = column_scale(&a).unwrap();
        for j in 0..4 {
            let n: f64 = s.col(j).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-14);
            for i in 0..6 {
                assert!((s[(i, j)] / d[j] - a[(i, j)]).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn designed_basis_hits_requested_ratios() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v = random_matrix(&mut rng, 7, 3);
        let target = [3.0, 1.0, 0.2];
        let ve = design_noise_basis(&v, &target).unwrap();
        assert_eq!(ve.shape(), (7, 7));
        assert!(Lu::new(&ve).unwrap().pivot_ratio() > 1e-12);
        let g = gsvd(&v, &ve).unwrap();
        for (r, t) in g.ratios().iter().zip(target) {
            assert!((r - t).abs() < 1e-8, "{r} vs {t}");
        }
        assert_eq!(g.q, 1);
    }

    #[test]
    fn designed_basis_all_equal_ratios_on_identity() {
        let v = leading_identity::<f64>(5, 3);
        let ve = design_noise_basis(&v, &[1.0, 1.0, 1.0]).unwrap();
        let g = gsvd(&v, &ve).unwrap();
        assert_eq!(g.q, 0);
        for (a, b) in g.alphas.iter().zip(&g.betas) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn designed_basis_rejects_increasing_ratios() {
        let v = leading_identity::<f64>(4, 2);
        assert!(matches!(design_noise_basis(&v, &[0.5, 2.0]), Err(Error::InfeasibleOrdering(_))));
        assert!(matches!(design_noise_basis(&v, &[0.5, -1.0]), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn low_bias_ratios_give_q_p_minus_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let v = random_matrix(&mut rng, 6, 4);
        let r = low_bias_ratios(4, 0.1).unwrap();
        let g = gsvd(&v, &design_noise_basis(&v, &r).unwrap()).unwrap();
        assert_eq!(g.q, 3);
        assert_abs_diff_eq!(g.alphas[0], g.betas[0], epsilon = 1e-10);
        for b in &g.betas[1..] {
            assert_abs_diff_eq!(*b, 0.1, epsilon = 1e-10);
        }
        assert!(low_bias_ratios(3, 0.8).is_err());
    }

    #[test]
    fn calibrated_ratios() {
        let r = bound_calibrated_ratios(3, 1, 8.0, 1.0, 0.5).unwrap();
        assert_abs_diff_eq!(r[0] * r[0] + r[1] * r[1], 8.0, epsilon = 1e-12);
        assert_eq!(r[2], 0.5);
        assert!(matches!(bound_calibrated_ratios(3, 1, 1.0, 1.0, 0.5), Err(Error::InfeasibleOrdering(_))));
    }
}
