//! Least squares, the minimum-l1 dominating estimator, and the analytic
//! MSE and threshold formulas.
//!
//! Complex models are solved on their real isomorphs with the extended
//! matrix laid out as `[iso(V) | iso(Ve)]`, so the unknown is
//! `[Re xi; Im xi; Re eta; Im eta]`. Variances in the complex API are
//! `sigma2 = E|eps_k|^2`, i.e. `sigma2 / 2` per real coordinate; the `_real`
//! functions take the per-coordinate variance of real data.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::decomp::{gsvd, svd, GsvdFactors, TIE_TOL};
use crate::error::{Error, Result};
use crate::l1solve::{
    column_rank, l1_min_equality_eliminating, BarrierProblem, BarrierSettings, BarrierStatus, SolveStatus, TiePolicy,
};
use crate::linalg::{Matrix, Qr};
use crate::realiso::{matrix_to_real, real_to_vector, vector_to_real, ComplexMatrix, ComplexVector};
use crate::scalar::Scalar;

/// `d = V xi + Ve eta` with noise variance `sigma2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearModel<T> {
    pub v: ComplexMatrix<T>,
    pub ve: ComplexMatrix<T>,
    pub sigma2: T,
}

impl<T: Scalar> LinearModel<T> {
    pub fn new(v: ComplexMatrix<T>, ve: ComplexMatrix<T>, sigma2: T) -> Result<Self> {
        let model = Self { v, ve, sigma2 };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let (n, p) = self.v.shape();
        if self.ve.rows() != n {
            return Err(Error::DimensionMismatch(format!("V has {n} rows, Ve has {}", self.ve.rows())));
        }
        if p == 0 || n < p {
            return Err(Error::DimensionMismatch(format!("need n >= p >= 1, got n={n}, p={p}")));
        }
        if self.ve.cols() == 0 {
            return Err(Error::DimensionMismatch("Ve has no columns".into()));
        }
        if !self.v.is_finite() || !self.ve.is_finite() || !self.sigma2.is_finite() {
            return Err(Error::NonFinite("model"));
        }
        if self.sigma2 < T::zero() {
            return Err(Error::InvalidInput(format!("sigma2 must be nonnegative, got {}", self.sigma2)));
        }
        if !svd(&matrix_to_real(&self.v)?)?.has_full_rank() {
            return Err(Error::RankDeficient(format!("V must have rank {p}")));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.v.rows()
    }

    pub fn p(&self) -> usize {
        self.v.cols()
    }

    /// `m - p`.
    pub fn noise_dim(&self) -> usize {
        self.ve.cols()
    }

    /// `[iso(V) | iso(Ve)]`.
    pub fn extended_real(&self) -> Result<Matrix<T>> {
        matrix_to_real(&self.v)?.hstack(&matrix_to_real(&self.ve)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Mode<T> {
    /// `min ||x||_1` subject to `A x = d`.
    Equality,
    /// `min ||y||_1` subject to `||d - A D y||_2 <= tau` with unit-norm
    /// columns `A D`, then `x = D y`.
    Residual(BarrierSettings<T>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominatingEstimate<T> {
    pub xi_d: ComplexVector<T>,
    pub eta_hat: ComplexVector<T>,
    /// Minimized l1 norm (of the scaled unknown in residual mode).
    pub objective: T,
    pub solver_status: SolveStatus,
}

/// Real counterpart of [`DominatingEstimate`].
#[derive(Clone, Debug, PartialEq)]
pub struct RealEstimate<T> {
    pub xi_d: Vec<T>,
    pub eta_hat: Vec<T>,
    pub objective: T,
    pub solver_status: SolveStatus,
}

/// Least-squares solver for a fixed design, factored once.
#[derive(Clone, Debug)]
pub struct LeastSquares<T> {
    qr: Qr<T>,
}

impl<T: Scalar> LeastSquares<T> {
    pub fn new(v: &Matrix<T>) -> Result<Self> {
        let (n, p) = v.shape();
        if n < p {
            return Err(Error::DimensionMismatch(format!("least squares needs n >= p, got {n}x{p}")));
        }
        if !svd(v)?.has_full_rank() {
            return Err(Error::RankDeficient(format!("V must have rank {p}")));
        }
        Ok(Self { qr: Qr::new(v) })
    }

    pub fn solve(&self, d: &[T]) -> Result<Vec<T>> {
        self.qr.solve_least_squares(d)
    }
}

pub fn least_squares<T: Scalar>(v: &ComplexMatrix<T>, d: &[Complex<T>]) -> Result<ComplexVector<T>> {
    let x = least_squares_real(&matrix_to_real(v)?, &vector_to_real(d)?)?;
    real_to_vector(&x)
}

pub fn least_squares_real<T: Scalar>(v: &Matrix<T>, d: &[T]) -> Result<Vec<T>> {
    LeastSquares::new(v)?.solve(d)
}

/// `sum_j c_j^{-2}` over the singular values of a real matrix.
fn inverse_square_sum<T: Scalar>(v: &Matrix<T>) -> Result<T> {
    let sv = svd(v)?;
    if !sv.has_full_rank() {
        return Err(Error::RankDeficient(format!("V must have rank {}", v.cols())));
    }
    Ok(sv.singular_values.iter().map(|&c| T::one() / (c * c)).sum())
}

/// `sigma2 * sum_j c_j^{-2}` for complex `V` with `E|eps_k|^2 = sigma2`.
pub fn mse_ls<T: Scalar>(v: &ComplexMatrix<T>, sigma2: T) -> Result<T> {
    // each complex singular value appears twice in the isomorph
    Ok(sigma2 * T::lit(0.5) * inverse_square_sum(&matrix_to_real(v)?)?)
}

pub fn mse_ls_real<T: Scalar>(v: &Matrix<T>, sigma2: T) -> Result<T> {
    Ok(sigma2 * inverse_square_sum(v)?)
}

/// Residual-mode solver for a fixed extended matrix: scales the columns to
/// unit norm and keeps the barrier factorization across data vectors.
#[derive(Clone, Debug)]
pub struct ResidualSolver<T> {
    problem: BarrierProblem<T>,
    scale: Vec<T>,
}

impl<T: Scalar> ResidualSolver<T> {
    pub fn new(a: &Matrix<T>) -> Result<Self> {
        let (rows, cols) = a.shape();
        let mut scale = Vec::with_capacity(cols);
        for j in 0..cols {
            let nrm = (0..rows).map(|i| a[(i, j)] * a[(i, j)]).sum::<T>().sqrt();
            if nrm == T::zero() {
                return Err(Error::ZeroColumn(j));
            }
            scale.push(T::one() / nrm);
        }
        let problem = BarrierProblem::new(&a.scale_cols(&scale))?;
        Ok(Self { problem, scale })
    }

    /// Returns `(x = D y, ||y||_1, status)`.
    pub fn solve(&self, d: &[T], settings: &BarrierSettings<T>) -> Result<(Vec<T>, T, SolveStatus)> {
        let sol = self.problem.solve(d, settings)?;
        let status = match sol.status {
            BarrierStatus::Converged => SolveStatus::Optimal,
            BarrierStatus::MaxIter => SolveStatus::MaxIter,
        };
        let x = sol.x.iter().zip(&self.scale).map(|(&y, &s)| y * s).collect();
        Ok((x, sol.objective, status))
    }
}

/// Solves the extended problem for real `(V, Ve)` and returns the stacked
/// solution `[xi; eta]`.
fn solve_extended<T: Scalar>(
    v: &Matrix<T>,
    ve: &Matrix<T>,
    d: &[T],
    mode: &Mode<T>,
    tie_policy: TiePolicy,
) -> Result<(Vec<T>, T, SolveStatus)> {
    let (n, p) = v.shape();
    let w = ve.cols();
    if ve.rows() != n || d.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "V is {n}x{p}, Ve has {} rows, d has {} entries",
            ve.rows(),
            d.len()
        )));
    }
    let a = v.hstack(ve)?;
    match mode {
        Mode::Equality => {
            if w == n && column_rank(ve) < n {
                return Err(Error::Singular);
            }
            // eliminate eta through Ve when possible
            let preferred: Vec<usize> = (p..p + w).collect();
            let sol = l1_min_equality_eliminating(&a, d, &preferred, tie_policy)?;
            Ok((sol.x, sol.objective, sol.status))
        }
        Mode::Residual(settings) => ResidualSolver::new(&a)?.solve(d, settings),
    }
}

pub fn dominating_estimate<T: Scalar>(
    model: &LinearModel<T>,
    d: &[Complex<T>],
    mode: &Mode<T>,
    tie_policy: TiePolicy,
) -> Result<DominatingEstimate<T>> {
    model.validate()?;
    if d.len() != model.n() {
        return Err(Error::DimensionMismatch(format!("d has {} entries, model has n = {}", d.len(), model.n())));
    }
    let v = matrix_to_real(&model.v)?;
    let ve = matrix_to_real(&model.ve)?;
    let (x, objective, solver_status) = solve_extended(&v, &ve, &vector_to_real(d)?, mode, tie_policy)?;
    let p2 = 2 * model.p();
    Ok(DominatingEstimate {
        xi_d: real_to_vector(&x[..p2])?,
        eta_hat: real_to_vector(&x[p2..])?,
        objective,
        solver_status,
    })
}

pub fn dominating_estimate_real<T: Scalar>(
    v: &Matrix<T>,
    ve: &Matrix<T>,
    d: &[T],
    mode: &Mode<T>,
    tie_policy: TiePolicy,
) -> Result<RealEstimate<T>> {
    let (n, p) = v.shape();
    if p == 0 || n < p {
        return Err(Error::DimensionMismatch(format!("need n >= p >= 1, got n={n}, p={p}")));
    }
    let (x, objective, solver_status) = solve_extended(v, ve, d, mode, tie_policy)?;
    Ok(RealEstimate { xi_d: x[..p].to_vec(), eta_hat: x[p..].to_vec(), objective, solver_status })
}

/// The minimizer in GSVD coordinates: entry `j` is `0` when
/// `alpha_j <= beta_j` and `d_tilde[n - p + j] / alpha_j` otherwise.
/// Map back with [`GsvdFactors::untransform_params`].
pub fn closed_form_gsvd<T: Scalar>(factors: &GsvdFactors<T>, d_tilde: &[T]) -> Vec<T> {
    let (n, p) = (factors.n(), factors.p());
    (0..p)
        .map(|j| {
            let (a, b) = (factors.alphas[j], factors.betas[j]);
            if a - b > T::lit(TIE_TOL) {
                d_tilde[n - p + j] / a
            } else {
                T::zero()
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport<T> {
    /// `bias2 / variance_sum`; `0` when `q = p`.
    pub sigma2_threshold: T,
    /// Number of pairs with `alpha_j > beta_j`.
    pub q: usize,
    pub p: usize,
    /// `sum_{j <= p-q} xi_tilde_j^2`.
    pub bias2: T,
    /// `sum_{j <= p-q} beta_j^2 / alpha_j^2`.
    pub variance_sum: T,
    /// `U1 xi`; for complex models this is the isomorph vector.
    pub xi_tilde: Vec<T>,
}

impl<T: Scalar> ThresholdReport<T> {
    /// `q = p`: nothing is shrunk and the estimator has no bias.
    pub fn always_dominated(&self) -> bool {
        self.q == self.p
    }
}

/// Threshold in per-coordinate units from a real GSVD and `xi_tilde = U1 xi`.
pub fn threshold_from_factors<T: Scalar>(factors: &GsvdFactors<T>, xi_tilde: &[T]) -> Result<ThresholdReport<T>> {
    let p = factors.p();
    if xi_tilde.len() != p {
        return Err(Error::DimensionMismatch(format!("xi has {} entries, p = {p}", xi_tilde.len())));
    }
    if factors.betas.last().is_some_and(|&b| b <= T::zero()) {
        return Err(Error::BetaZero("beta_p = 0".into()));
    }
    let q = factors.q;
    let ratios = factors.ratios();
    let shrunk = p - q;
    let bias2: T = xi_tilde[..shrunk].iter().map(|&x| x * x).sum();
    let variance_sum: T = ratios[..shrunk].iter().map(|&r| r * r).sum();
    let sigma2_threshold = if shrunk == 0 { T::zero() } else { bias2 / variance_sum };
    Ok(ThresholdReport { sigma2_threshold, q, p, bias2, variance_sum, xi_tilde: xi_tilde.to_vec() })
}

pub fn domination_threshold_real<T: Scalar>(v: &Matrix<T>, ve: &Matrix<T>, xi: &[T]) -> Result<ThresholdReport<T>> {
    let f = gsvd(v, ve)?;
    threshold_from_factors(&f, &f.transform_params(xi)?)
}

/// Threshold on `sigma2 = E|eps_k|^2` for a complex model.
pub fn domination_threshold<T: Scalar>(
    v: &ComplexMatrix<T>,
    ve: &ComplexMatrix<T>,
    xi: &[Complex<T>],
) -> Result<ThresholdReport<T>> {
    let f = gsvd(&matrix_to_real(v)?, &matrix_to_real(ve)?)?;
    let iso = threshold_from_factors(&f, &f.transform_params(&vector_to_real(xi)?)?)?;
    Ok(complex_units(iso))
}

/// Isomorph pairs come in twos and carry half the complex variance.
fn complex_units<T: Scalar>(iso: ThresholdReport<T>) -> ThresholdReport<T> {
    let variance_sum = iso.variance_sum * T::lit(0.5);
    let sigma2_threshold = if iso.q == iso.p { T::zero() } else { iso.bias2 / variance_sum };
    ThresholdReport { sigma2_threshold, q: iso.q / 2, p: iso.p / 2, variance_sum, ..iso }
}

/// MSE of the closed-form estimator in per-coordinate units. Tied pairs
/// (`alpha_j = beta_j`) contribute the average of the shrunk and kept
/// outcomes, which is what randomized tie-breaking yields.
pub fn mse_d_from_factors<T: Scalar>(factors: &GsvdFactors<T>, xi_tilde: &[T], sigma2: T) -> T {
    let half = T::lit(0.5);
    factors
        .alphas
        .iter()
        .zip(&factors.betas)
        .zip(xi_tilde)
        .map(|((&a, &b), &x)| {
            let bias = x * x;
            let var = sigma2 * (b * b) / (a * a);
            if (a - b).abs() <= T::lit(TIE_TOL) {
                half * (bias + var)
            } else if a > b {
                var
            } else {
                bias
            }
        })
        .sum()
}

pub fn mse_d_closed_real<T: Scalar>(v: &Matrix<T>, ve: &Matrix<T>, xi: &[T], sigma2: T) -> Result<T> {
    let f = gsvd(v, ve)?;
    Ok(mse_d_from_factors(&f, &f.transform_params(xi)?, sigma2))
}

pub fn mse_d_closed<T: Scalar>(v: &ComplexMatrix<T>, ve: &ComplexMatrix<T>, xi: &[Complex<T>], sigma2: T) -> Result<T> {
    let f = gsvd(&matrix_to_real(v)?, &matrix_to_real(ve)?)?;
    let xt = f.transform_params(&vector_to_real(xi)?)?;
    Ok(mse_d_from_factors(&f, &xt, sigma2 * T::lit(0.5)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Convenient,
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Convenience<T> {
    pub verdict: Verdict,
    /// `sigma2 * variance_sum - tau_b`.
    pub margin: T,
}

/// Decides whether the estimator is preferable knowing only a bound
/// `tau_b >= ||xi||^2`.
pub fn convenience_check<T: Scalar>(
    v: &ComplexMatrix<T>,
    ve: &ComplexMatrix<T>,
    tau_b: T,
    sigma2: T,
) -> Result<Convenience<T>> {
    if !(tau_b >= T::zero()) {
        return Err(Error::InvalidInput(format!("tau_b must be nonnegative, got {tau_b}")));
    }
    let p = v.cols();
    let report = domination_threshold(v, ve, &vec![Complex::new(T::zero(), T::zero()); p])?;
    Ok(convenience_from_report(&report, tau_b, sigma2))
}

pub fn convenience_from_report<T: Scalar>(report: &ThresholdReport<T>, tau_b: T, sigma2: T) -> Convenience<T> {
    let margin = sigma2 * report.variance_sum - tau_b;
    let verdict = if margin >= T::zero() || report.always_dominated() { Verdict::Convenient } else { Verdict::Unknown };
    Convenience { verdict, margin }
}

/// The `p` entries of `[xi_D; eta_hat]` with largest modulus, largest
/// first; equal moduli keep index order.
pub fn sorted_whole_vector_estimate<T: Scalar>(est: &DominatingEstimate<T>, p: usize) -> ComplexVector<T> {
    let mut all: Vec<Complex<T>> = est.xi_d.iter().chain(&est.eta_hat).copied().collect();
    all.sort_by(|a, b| b.norm_sqr().partial_cmp(&a.norm_sqr()).unwrap_or(std::cmp::Ordering::Equal));
    all.truncate(p);
    all
}

/// `||x||_1` of the isomorph.
pub fn isomorph_l1<T: Scalar>(x: &[Complex<T>]) -> T {
    x.iter().map(|z| z.re.abs() + z.im.abs()).sum()
}
