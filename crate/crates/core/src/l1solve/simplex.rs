//! Dense tableau simplex for `min c'z` subject to `A z = b`, with some
//! variables free and the rest nonnegative. The caller supplies an initial
//! feasible basis made of unit columns, which is always available for the
//! l1 fitting LP.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Consecutive degenerate pivots before switching to Bland's rule.
const DEGENERATE_STREAK: usize = 50;

#[derive(Clone, Debug)]
pub(crate) struct Tableau<T> {
    t: Matrix<T>,
    rhs: Vec<T>,
    reduced: Vec<T>,
    basis: Vec<usize>,
    row_of: Vec<Option<usize>>,
    free: Vec<bool>,
    flipped: Vec<bool>,
    cost_tol: T,
    piv_tol: T,
    pub(crate) pivots: usize,
}

impl<T: Scalar> Tableau<T> {
    /// `basis[i]` must index a column equal to the `i`-th unit vector and
    /// `b` must be nonnegative on rows whose basic variable is bounded.
    pub(crate) fn new(a: Matrix<T>, b: Vec<T>, c: &[T], free: Vec<bool>, basis: Vec<usize>) -> Result<Self> {
        let (m, nv) = a.shape();
        if b.len() != m || c.len() != nv || free.len() != nv || basis.len() != m {
            return Err(Error::DimensionMismatch("simplex tableau setup".into()));
        }
        let mut row_of = vec![None; nv];
        for (i, &j) in basis.iter().enumerate() {
            let unit = (0..m).all(|k| a[(k, j)] == if k == i { T::one() } else { T::zero() });
            if !unit || (!free[j] && b[i] < T::zero()) {
                return Err(Error::InvalidInput(format!("column {j} is not a feasible unit basis column")));
            }
            row_of[j] = Some(i);
        }
        let reduced = (0..nv).map(|j| c[j] - (0..m).map(|i| c[basis[i]] * a[(i, j)]).sum::<T>()).collect();
        let scale = c.iter().fold(T::one(), |s, x| s.max(x.abs()));
        Ok(Self {
            t: a,
            rhs: b,
            reduced,
            basis,
            row_of,
            free,
            flipped: vec![false; nv],
            cost_tol: T::lit(1e-9) * scale,
            piv_tol: T::lit(1e-9),
            pivots: 0,
        })
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let (m, nv) = self.t.shape();
        let p = self.t[(r, j)];
        for k in 0..nv {
            self.t[(r, k)] /= p;
        }
        self.rhs[r] /= p;
        self.t[(r, j)] = T::one();
        let pivot_row = self.t.row(r).to_vec();
        let pivot_rhs = self.rhs[r];
        for i in 0..m {
            if i == r {
                continue;
            }
            let f = self.t[(i, j)];
            if f == T::zero() {
                continue;
            }
            for (x, &pr) in self.t.row_mut(i).iter_mut().zip(&pivot_row) {
                *x -= f * pr;
            }
            self.t[(i, j)] = T::zero();
            self.rhs[i] -= f * pivot_rhs;
            // guard against drift below zero on bounded rows
            if !self.free[self.basis[i]] && self.rhs[i] < T::zero() && self.rhs[i] > -self.piv_tol {
                self.rhs[i] = T::zero();
            }
        }
        let f = self.reduced[j];
        if f != T::zero() {
            for (d, &pr) in self.reduced.iter_mut().zip(&pivot_row) {
                *d -= f * pr;
            }
            self.reduced[j] = T::zero();
        }
        let leaving = self.basis[r];
        self.row_of[leaving] = None;
        self.basis[r] = j;
        self.row_of[j] = Some(r);
        self.pivots += 1;
    }

    fn flip(&mut self, j: usize) {
        for i in 0..self.t.rows() {
            self.t[(i, j)] = -self.t[(i, j)];
        }
        self.reduced[j] = -self.reduced[j];
        self.flipped[j] = !self.flipped[j];
    }

    /// Rows that can block an increase of nonbasic `j`, as `(row, ratio)`.
    fn blocking_rows(&self, j: usize) -> Vec<(usize, T)> {
        (0..self.t.rows())
            .filter(|&i| !self.free[self.basis[i]] && self.t[(i, j)] > self.piv_tol)
            .map(|i| (i, self.rhs[i].max(T::zero()) / self.t[(i, j)]))
            .collect()
    }

    /// Minimum-ratio row; ties resolved by smallest basic index, or
    /// uniformly at random when `rng` is given.
    fn ratio_test<R: Rng>(&self, j: usize, rng: Option<&mut R>) -> Option<(usize, T)> {
        let rows = self.blocking_rows(j);
        let best = rows.iter().map(|&(_, r)| r).fold(None, |m: Option<T>, r| Some(m.map_or(r, |m| m.min(r))))?;
        let tol = self.piv_tol * (T::one() + best.abs());
        let ties: Vec<(usize, T)> = rows.into_iter().filter(|&(_, r)| r <= best + tol).collect();
        match rng {
            Some(rng) => Some(ties[rng.random_range(0..ties.len())]),
            None => ties.into_iter().min_by_key(|&(i, _)| self.basis[i]),
        }
    }

    fn entering(&self, bland: bool) -> Option<usize> {
        let nv = self.t.cols();
        let mut best: Option<(usize, T)> = None;
        for j in 0..nv {
            if self.row_of[j].is_some() {
                continue;
            }
            let d = self.reduced[j];
            let score = if self.free[j] {
                d.abs()
            } else if d < T::zero() {
                -d
            } else {
                continue;
            };
            if score <= self.cost_tol {
                continue;
            }
            if bland {
                return Some(j);
            }
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((j, score));
            }
        }
        best.map(|(j, _)| j)
    }

    /// Primal simplex iterations until no improving column remains.
    pub(crate) fn optimize<R: Rng>(&mut self, max_pivots: usize, mut rng: Option<&mut R>) -> Result<()> {
        let mut degenerate = 0usize;
        let start = self.pivots;
        loop {
            if self.pivots - start >= max_pivots {
                return Err(Error::MaxIterations(max_pivots));
            }
            let Some(j) = self.entering(degenerate >= DEGENERATE_STREAK) else {
                return Ok(());
            };
            if self.free[j] && self.reduced[j] > T::zero() {
                self.flip(j);
            }
            let Some((r, step)) = self.ratio_test(j, rng.as_deref_mut()) else {
                return Err(Error::Infeasible("objective unbounded below".into()));
            };
            if step <= self.piv_tol {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, j);
        }
    }

    /// Pivots every nonbasic free variable into the basis. At an optimum
    /// their reduced costs vanish, so the objective is unchanged.
    pub(crate) fn complete_free<R: Rng>(&mut self, mut rng: Option<&mut R>) -> Result<()> {
        for j in 0..self.t.cols() {
            if !self.free[j] || self.row_of[j].is_some() {
                continue;
            }
            let up = !self.blocking_rows(j).is_empty();
            self.flip(j);
            let down = !self.blocking_rows(j).is_empty();
            self.flip(j);
            let go_down = match (up, down) {
                (false, false) => {
                    return Err(Error::RankDeficient(format!("free column {j} is dependent on the basis")))
                }
                (true, false) => false,
                (false, true) => true,
                (true, true) => rng.as_deref_mut().is_some_and(|r| r.random_bool(0.5)),
            };
            if go_down {
                self.flip(j);
            }
            let (r, _) = self.ratio_test(j, rng.as_deref_mut()).expect("blocking row exists");
            self.pivot(r, j);
        }
        Ok(())
    }

    /// Nonbasic bounded columns with zero reduced cost whose entry moves to
    /// a different vertex.
    pub(crate) fn alternative_columns(&self) -> Vec<usize> {
        (0..self.t.cols())
            .filter(|&j| self.row_of[j].is_none() && !self.free[j] && self.reduced[j].abs() <= self.cost_tol)
            .filter(|&j| {
                let rows = self.blocking_rows(j);
                !rows.is_empty() && rows.iter().all(|&(_, r)| r > self.piv_tol)
            })
            .collect()
    }

    /// Lazy random walk over optimal vertices: each step either stays put or
    /// pivots in a uniformly chosen zero-reduced-cost column.
    pub(crate) fn random_walk<R: Rng>(&mut self, steps: usize, rng: &mut R) {
        for _ in 0..steps {
            if rng.random_bool(0.5) {
                continue;
            }
            let cands = self.alternative_columns();
            if cands.is_empty() {
                return;
            }
            let j = cands[rng.random_range(0..cands.len())];
            if let Some((r, _)) = self.ratio_test(j, Some(&mut *rng)) {
                self.pivot(r, j);
            }
        }
    }

    pub(crate) fn value(&self, j: usize) -> T {
        let v = self.row_of[j].map_or(T::zero(), |i| self.rhs[i]);
        if self.flipped[j] {
            -v
        } else {
            v
        }
    }

    pub(crate) fn is_basic(&self, j: usize) -> bool {
        self.row_of[j].is_some()
    }
}
