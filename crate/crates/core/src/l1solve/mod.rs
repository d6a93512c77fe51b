//! l1 solvers.
//!
//! * [`l1_fit`]: `min_x sum_i |b - B x|_i` by a dense simplex; returns a
//!   basic solution `x = B_p^{-1} b_p` where `p` residuals vanish.
//! * [`l1_min_equality`]: `min ||x||_1` subject to `A x = d`, reduced to
//!   [`l1_fit`] by eliminating a nonsingular column block.
//! * [`l1_min_residual`]: `min ||x||_1` subject to `||d - A x||_2 <= tau`,
//!   by a primal log-barrier method.
//! * [`brute_force_l1`]: exhaustive enumeration of basic solutions, used as
//!   a test oracle.

mod barrier;
mod brute;
mod simplex;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use barrier::{l1_min_residual, BarrierProblem, BarrierSolution, BarrierStatus};
pub use brute::{brute_force_l1, BRUTE_FORCE_LIMIT};

use crate::decomp::RANK_TOL;
use crate::error::{Error, Result};
use crate::linalg::{norm1, Lu, Matrix, Qr};
use crate::scalar::Scalar;
use simplex::Tableau;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    /// Optimal, but another optimal vertex with the same objective exists.
    DegenerateTie,
    Infeasible,
    MaxIter,
}

impl SolveStatus {
    pub fn is_success(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::DegenerateTie)
    }
}

/// Selection rule among optimal vertices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum TiePolicy {
    /// Deterministic: smallest-index pivoting, no exploration.
    #[default]
    FirstBasis,
    /// Seeded random pivoting followed by a lazy random walk over the
    /// optimal vertices. Uniform over optimal vertices when the optimal face
    /// is a product of independent ties (e.g. identity designs); best-effort
    /// otherwise.
    Randomize(u64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct L1Solution<T> {
    pub x: Vec<T>,
    pub objective: T,
    /// Rows where the residual vanishes (for [`l1_min_equality`]: the zero
    /// entries of `x`). Sorted.
    pub active_set: Vec<usize>,
    pub status: SolveStatus,
}

/// Log-barrier parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierSettings<T> {
    /// Residual bound, in the units of the data.
    pub tau: T,
    /// Multiplier of the barrier parameter per outer iteration.
    pub barrier_mu: T,
    /// Newton decrement target for the inner iterations.
    pub inner_tol: T,
    /// Duality-gap target for the outer iterations.
    pub outer_tol: T,
    /// Newton steps allowed per outer iteration.
    pub max_iters: usize,
}

impl<T: Scalar> BarrierSettings<T> {
    pub fn new(tau: T) -> Self {
        Self { tau, barrier_mu: T::lit(10.0), inner_tol: T::lit(1e-8), outer_tol: T::lit(1e-6), max_iters: 50 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > T::zero() && self.tau.is_finite()) {
            return Err(Error::InvalidInput(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.barrier_mu > T::one()) {
            return Err(Error::InvalidInput(format!("barrier_mu must exceed 1, got {}", self.barrier_mu)));
        }
        if !(self.inner_tol > T::zero() && self.outer_tol > T::zero()) || self.max_iters == 0 {
            return Err(Error::InvalidInput("tolerances and max_iters must be positive".into()));
        }
        Ok(())
    }
}

/// Steps of the lazy walk over optimal vertices used by [`TiePolicy::Randomize`].
fn walk_steps(rows: usize, cols: usize) -> usize {
    40 * (rows + cols) + 100
}

/// Numeric column rank via pivoted QR.
pub(crate) fn column_rank<T: Scalar>(b: &Matrix<T>) -> usize {
    let qr = Qr::with_pivoting(b);
    let r = qr.r();
    let k = r.rows().min(r.cols());
    if k == 0 {
        return 0;
    }
    let top = r[(0, 0)].abs();
    if top == T::zero() {
        return 0;
    }
    (0..k).take_while(|&i| r[(i, i)].abs() > T::lit(RANK_TOL) * top).count()
}

/// Solves `min_x sum_i |(b - B x)_i|` and returns a basic optimal solution.
pub fn l1_fit<T: Scalar>(b: &[T], bm: &Matrix<T>, tie_policy: TiePolicy) -> Result<L1Solution<T>> {
    let (rows, p) = bm.shape();
    if b.len() != rows {
        return Err(Error::DimensionMismatch(format!("b has {} entries, B has {rows} rows", b.len())));
    }
    if !bm.is_finite() || b.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("l1_fit input"));
    }
    if p > rows || column_rank(bm) < p {
        return Err(Error::RankDeficient(format!("B ({rows}x{p}) must have rank {p}")));
    }
    // Columns: x (free, p) | u (rows) | v (rows); B x + u - v = b.
    let nv = p + 2 * rows;
    let mut a = Matrix::zeros(rows, nv);
    let mut rhs = Vec::with_capacity(rows);
    let mut basis = Vec::with_capacity(rows);
    for i in 0..rows {
        let s = if b[i] >= T::zero() { T::one() } else { -T::one() };
        for j in 0..p {
            a[(i, j)] = s * bm[(i, j)];
        }
        a[(i, p + i)] = s;
        a[(i, p + rows + i)] = -s;
        rhs.push(s * b[i]);
        basis.push(if s > T::zero() { p + i } else { p + rows + i });
    }
    let cost: Vec<T> = (0..nv).map(|j| if j < p { T::zero() } else { T::one() }).collect();
    let free: Vec<bool> = (0..nv).map(|j| j < p).collect();
    let mut tab = Tableau::new(a, rhs, &cost, free, basis)?;
    let max_pivots = 50 * (rows + nv) + 1000;
    let mut rng = match tie_policy {
        TiePolicy::FirstBasis => None,
        TiePolicy::Randomize(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
    };
    tab.optimize(max_pivots, rng.as_mut())?;
    tab.complete_free(rng.as_mut())?;
    if let Some(rng) = rng.as_mut() {
        tab.random_walk(walk_steps(rows, p), rng);
    }
    let status = if tab.alternative_columns().is_empty() { SolveStatus::Optimal } else { SolveStatus::DegenerateTie };
    let active_set: Vec<usize> = (0..rows).filter(|&i| !tab.is_basic(p + i) && !tab.is_basic(p + rows + i)).collect();
    // Re-solve the active square system for a clean vertex.
    let bp = bm.select_rows(&active_set);
    let b_active: Vec<T> = active_set.iter().map(|&i| b[i]).collect();
    let x = match Lu::new(&bp).and_then(|lu| lu.solve(&b_active)) {
        Ok(x) => x,
        Err(_) => (0..p).map(|j| tab.value(j)).collect(),
    };
    let objective = residual_l1(b, bm, &x)?;
    Ok(L1Solution { x, objective, active_set, status })
}

pub(crate) fn residual_l1<T: Scalar>(b: &[T], bm: &Matrix<T>, x: &[T]) -> Result<T> {
    let bx = bm.mul_vec(x)?;
    Ok(b.iter().zip(&bx).map(|(&bi, &yi)| (bi - yi).abs()).sum())
}

/// `min ||x||_1` subject to `A x = d`.
pub fn l1_min_equality<T: Scalar>(a: &Matrix<T>, d: &[T], tie_policy: TiePolicy) -> Result<L1Solution<T>> {
    let all: Vec<usize> = (0..a.cols()).collect();
    l1_min_equality_eliminating(a, d, &all, tie_policy)
}

/// As [`l1_min_equality`], eliminating basic variables chosen from
/// `preferred` columns when they span the row space.
pub(crate) fn l1_min_equality_eliminating<T: Scalar>(
    a: &Matrix<T>,
    d: &[T],
    preferred: &[usize],
    tie_policy: TiePolicy,
) -> Result<L1Solution<T>> {
    let (n, m) = a.shape();
    if d.len() != n {
        return Err(Error::DimensionMismatch(format!("d has {} entries, A has {n} rows", d.len())));
    }
    if m < n {
        return Err(Error::DimensionMismatch(format!("A is {n}x{m}; need at least as many columns as rows")));
    }
    if !a.is_finite() || d.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("l1_min_equality input"));
    }
    // Drop dependent rows after checking consistency.
    let row_rank = column_rank(&a.transpose());
    let (a, d) = if row_rank < n {
        let keep = independent_rows(a, row_rank);
        let a_r = a.select_rows(&keep);
        let d_r: Vec<T> = keep.iter().map(|&i| d[i]).collect();
        let consistent = consistent_with(a, d, &a_r, &d_r)?;
        if !consistent {
            return Err(Error::Infeasible("A x = d has no solution".into()));
        }
        (a_r, d_r)
    } else {
        (a.clone(), d.to_vec())
    };
    let n = a.rows();
    let basic = choose_basic_columns(&a, preferred, n);
    let free_cols: Vec<usize> = (0..m).filter(|j| !basic.contains(j)).collect();
    let lu = Lu::new(&a.select_cols(&basic))?;
    let an_inv_d = lu.solve(&d)?;
    let an_inv_af = lu.solve_matrix(&a.select_cols(&free_cols))?;
    let k = free_cols.len();
    // x = [x_F; x_N] = b - B x_F with b = [0; A_N^{-1} d], B = [-I; A_N^{-1} A_F]
    let bm = Matrix::from_fn(k + n, k, |i, j| {
        if i < k {
            if i == j {
                -T::one()
            } else {
                T::zero()
            }
        } else {
            an_inv_af[(i - k, j)]
        }
    });
    let mut b = vec![T::zero(); k];
    b.extend_from_slice(&an_inv_d);
    let fit = if k == 0 {
        L1Solution { x: vec![], objective: norm1(&b), active_set: vec![], status: SolveStatus::Optimal }
    } else {
        l1_fit(&b, &bm, tie_policy)?
    };
    let xn = {
        let af_xf = an_inv_af.mul_vec(&fit.x)?;
        an_inv_d.iter().zip(&af_xf).map(|(&u, &v)| u - v).collect::<Vec<T>>()
    };
    let mut x = vec![T::zero(); m];
    for (&j, &v) in free_cols.iter().zip(&fit.x) {
        x[j] = v;
    }
    for (&j, &v) in basic.iter().zip(&xn) {
        x[j] = v;
    }
    let position: Vec<usize> = free_cols.iter().chain(&basic).copied().collect();
    let mut active_set: Vec<usize> = fit.active_set.iter().map(|&i| position[i]).collect();
    active_set.sort_unstable();
    Ok(L1Solution { objective: norm1(&x), x, active_set, status: fit.status })
}

fn independent_rows<T: Scalar>(a: &Matrix<T>, rank: usize) -> Vec<usize> {
    let qr = Qr::with_pivoting(&a.transpose());
    let mut rows: Vec<usize> = qr.permutation()[..rank].to_vec();
    rows.sort_unstable();
    rows
}

fn consistent_with<T: Scalar>(a: &Matrix<T>, d: &[T], a_r: &Matrix<T>, d_r: &[T]) -> Result<bool> {
    // minimum-norm solution of the reduced system, then check all rows
    let g = a_r.matmul(&a_r.transpose())?;
    let y = Lu::new(&g)?.solve(d_r)?;
    let x = a_r.tr_mul_vec(&y)?;
    let ax = a.mul_vec(&x)?;
    let scale = d.iter().fold(T::one(), |s, v| s.max(v.abs()));
    Ok(ax.iter().zip(d).all(|(&u, &v)| (u - v).abs() <= T::lit(1e-8) * scale))
}

/// Picks `n` columns forming a well-conditioned nonsingular block, from
/// `preferred` when possible.
fn choose_basic_columns<T: Scalar>(a: &Matrix<T>, preferred: &[usize], n: usize) -> Vec<usize> {
    let pick = |cols: &[usize]| -> Option<Vec<usize>> {
        if cols.len() < n {
            return None;
        }
        let sub = a.select_cols(cols);
        if column_rank(&sub.transpose()) < n {
            return None;
        }
        let qr = Qr::with_pivoting(&sub);
        let mut chosen: Vec<usize> = qr.permutation()[..n].iter().map(|&k| cols[k]).collect();
        chosen.sort_unstable();
        Some(chosen)
    };
    pick(preferred).unwrap_or_else(|| {
        let all: Vec<usize> = (0..a.cols()).collect();
        pick(&all).expect("full row rank guarantees a basis")
    })
}
