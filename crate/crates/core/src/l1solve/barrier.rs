//! Primal log-barrier method for `min ||x||_1` s.t. `||d - A x||_2 <= tau`.
//!
//! The problem is posed over `(x, u)` as `min sum u` with `|x_i| <= u_i` and
//! the quadratic residual constraint. Each outer stage minimizes
//! `t sum u - sum log(u - x) - sum log(u + x) - log((tau^2 - ||r||^2) / 2)`
//! by damped Newton steps, then multiplies `t` by `barrier_mu`.

use super::BarrierSettings;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm1, norm2, Cholesky, Lu, Matrix};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};

const ARMIJO: f64 = 0.01;
const BACKTRACK: f64 = 0.5;
const MAX_BACKTRACKS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BarrierStatus {
    Converged,
    /// Some stage used all its Newton steps; the iterate is still feasible.
    MaxIter,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BarrierSolution<T> {
    pub x: Vec<T>,
    pub objective: T,
    pub status: BarrierStatus,
    pub newton_steps: usize,
    /// Largest `||d - A x||_2` over all iterates.
    pub max_residual: T,
}

/// A matrix with the products the barrier iterations reuse. Build once and
/// solve for many right-hand sides.
#[derive(Clone, Debug)]
pub struct BarrierProblem<T> {
    a: Matrix<T>,
    ata: Matrix<T>,
    /// Factor of `A A'` for the minimum-norm starting point.
    aat: Option<Cholesky<T>>,
}

impl<T: Scalar> BarrierProblem<T> {
    pub fn new(a: &Matrix<T>) -> Result<Self> {
        if a.rows() == 0 || a.cols() == 0 || a.max_abs() == T::zero() {
            return Err(Error::InvalidInput("barrier solver needs a nonzero matrix".into()));
        }
        if !a.is_finite() {
            return Err(Error::NonFinite("barrier matrix"));
        }
        let ata = a.gram();
        let aat = Cholesky::new(&a.transpose().gram()).ok();
        Ok(Self { a: a.clone(), ata, aat })
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.a
    }

    /// Minimum-norm solution of `A x = d`, or the least-squares one when
    /// `A A'` is singular.
    fn start(&self, d: &[T]) -> Result<Vec<T>> {
        match &self.aat {
            Some(ch) => self.a.tr_mul_vec(&ch.solve(d)),
            None => {
                let sv = crate::decomp::svd(&self.a.transpose())?;
                // A' = U1 S U2  =>  A^+ d = U1 S^{-1} U2 d
                let top = sv.singular_values.first().copied().unwrap_or(T::zero());
                let y = sv.u2.mul_vec(d)?;
                let z: Vec<T> = (0..sv.u1.rows())
                    .map(|i| {
                        (0..sv.singular_values.len())
                            .filter(|&k| sv.singular_values[k] > T::lit(1e-12) * top)
                            .map(|k| sv.u1[(i, k)] * y[k] / sv.singular_values[k])
                            .sum()
                    })
                    .collect();
                Ok(z)
            }
        }
    }

    pub fn solve(&self, d: &[T], settings: &BarrierSettings<T>) -> Result<BarrierSolution<T>> {
        settings.validate()?;
        let (rows, n) = self.a.shape();
        if d.len() != rows {
            return Err(Error::DimensionMismatch(format!("d has {} entries, A has {rows} rows", d.len())));
        }
        if d.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("barrier data"));
        }
        let tau = settings.tau;
        if norm2(d) <= tau {
            return Ok(BarrierSolution {
                x: vec![T::zero(); n],
                objective: T::zero(),
                status: BarrierStatus::Converged,
                newton_steps: 0,
                max_residual: norm2(d),
            });
        }
        let x0 = self.start(d)?;
        let r0 = norm2(&residual_ax(&self.a, &x0, d)?);
        if !(r0 < tau) {
            return Err(Error::Infeasible(format!(
                "residual bound {tau} is below the distance {r0} from d to range(A)"
            )));
        }
        let big_n = T::from_usize_lossy(2 * n + 1);
        let x0_norm = norm1(&x0);
        let max_x0 = x0.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let mut x = x0.clone();
        let mut u: Vec<T> = x0.iter().map(|v| T::lit(0.95) * v.abs() + T::lit(0.1) * max_x0).collect();
        let mut t = (big_n / x0_norm).max(T::one());
        let stages = ((big_n.ln() - settings.outer_tol.ln() - t.ln()) / settings.barrier_mu.ln())
            .ceil()
            .to_usize()
            .unwrap_or(0)
            .max(1);
        let mut status = BarrierStatus::Converged;
        let mut newton_steps = 0;
        let mut max_residual = r0;
        log::debug!("barrier: n={n}, tau={tau}, t0={t}, stages={stages}");
        for _ in 0..stages {
            let (steps, hit_max, worst) = self.newton_stage(d, tau, t, &mut x, &mut u, settings)?;
            newton_steps += steps;
            max_residual = max_residual.max(worst);
            if hit_max {
                status = BarrierStatus::MaxIter;
            }
            t *= settings.barrier_mu;
        }
        Ok(BarrierSolution { objective: norm1(&x), x, status, newton_steps, max_residual })
    }

    fn newton_stage(
        &self,
        d: &[T],
        tau: T,
        t: T,
        x: &mut Vec<T>,
        u: &mut Vec<T>,
        settings: &BarrierSettings<T>,
    ) -> Result<(usize, bool, T)> {
        let n = x.len();
        let half = T::lit(0.5);
        let eps2 = tau * tau;
        let mut r = residual_ax(&self.a, x, d)?;
        let mut worst = T::zero();
        let barrier = |x: &[T], u: &[T], r: &[T]| -> Option<T> {
            let fe = half * (dot(r, r) - eps2);
            if !(fe < T::zero()) {
                return None;
            }
            let mut f = t * u.iter().copied().sum::<T>() - (-fe).ln();
            for i in 0..x.len() {
                let f1 = x[i] - u[i];
                let f2 = -x[i] - u[i];
                if !(f1 < T::zero() && f2 < T::zero()) {
                    return None;
                }
                f -= (-f1).ln() + (-f2).ln();
            }
            Some(f)
        };
        let mut f = barrier(x, u, &r).ok_or_else(|| Error::Infeasible("barrier start is not interior".into()))?;
        for step in 0..settings.max_iters {
            let fe = half * (dot(&r, &r) - eps2);
            let atr = self.a.tr_mul_vec(&r)?;
            let mut sig11 = vec![T::zero(); n];
            let mut sig12 = vec![T::zero(); n];
            let mut ntgz = vec![T::zero(); n];
            let mut ntgu = vec![T::zero(); n];
            for i in 0..n {
                let f1 = x[i] - u[i];
                let f2 = -x[i] - u[i];
                ntgz[i] = T::one() / f1 - T::one() / f2 + atr[i] / fe;
                ntgu[i] = -t - T::one() / f1 - T::one() / f2;
                sig11[i] = T::one() / (f1 * f1) + T::one() / (f2 * f2);
                sig12[i] = -T::one() / (f1 * f1) + T::one() / (f2 * f2);
            }
            let mut h = Matrix::from_fn(n, n, |i, j| self.ata[(i, j)] * (-T::one() / fe) + atr[i] * atr[j] / (fe * fe));
            let mut w1 = vec![T::zero(); n];
            for i in 0..n {
                h[(i, i)] += sig11[i] - sig12[i] * sig12[i] / sig11[i];
                w1[i] = ntgz[i] - sig12[i] / sig11[i] * ntgu[i];
            }
            let dx = match Cholesky::new(&h) {
                Ok(ch) => ch.solve(&w1),
                Err(_) => match Lu::new(&h).and_then(|lu| lu.solve(&w1)) {
                    Ok(v) => v,
                    Err(_) => {
                        log::warn!("barrier: Newton system is singular; stopping stage early");
                        return Ok((step, false, worst));
                    }
                },
            };
            let du: Vec<T> = (0..n).map(|i| ntgu[i] / sig11[i] - sig12[i] / sig11[i] * dx[i]).collect();
            let adx = self.a.mul_vec(&dx)?;
            // largest step keeping every constraint strictly satisfied
            let mut smax = T::one();
            for i in 0..n {
                let f1 = x[i] - u[i];
                let f2 = -x[i] - u[i];
                let g1 = dx[i] - du[i];
                let g2 = -dx[i] - du[i];
                if g1 > T::zero() {
                    smax = smax.min(-f1 / g1);
                }
                if g2 > T::zero() {
                    smax = smax.min(-f2 / g2);
                }
            }
            let aq = dot(&adx, &adx);
            let bq = T::lit(2.0) * dot(&r, &adx);
            let cq = dot(&r, &r) - eps2;
            if aq > T::zero() {
                let disc = (bq * bq - T::lit(4.0) * aq * cq).max(T::zero());
                smax = smax.min((-bq + disc.sqrt()) / (T::lit(2.0) * aq));
            }
            let grad_dir: T = (0..n).map(|i| -(ntgz[i] * dx[i] + ntgu[i] * du[i])).sum();
            // decrement of the barrier objective divided by t
            let lambda2 = -grad_dir / t;
            if lambda2 * half < settings.inner_tol {
                return Ok((step, false, worst));
            }
            let mut s = T::lit(0.99) * smax;
            let mut accepted = None;
            for _ in 0..MAX_BACKTRACKS {
                let xp: Vec<T> = (0..n).map(|i| x[i] + s * dx[i]).collect();
                let up: Vec<T> = (0..n).map(|i| u[i] + s * du[i]).collect();
                let rp: Vec<T> = (0..r.len()).map(|i| r[i] + s * adx[i]).collect();
                if let Some(fp) = barrier(&xp, &up, &rp) {
                    if fp <= f + T::lit(ARMIJO) * s * grad_dir {
                        accepted = Some((xp, up, rp, fp));
                        break;
                    }
                }
                s *= T::lit(BACKTRACK);
            }
            let Some((xp, up, rp, fp)) = accepted else {
                log::debug!("barrier: line search stalled at step {step}");
                return Ok((step + 1, false, worst));
            };
            *x = xp;
            *u = up;
            r = rp;
            f = fp;
            worst = worst.max(norm2(&r));
        }
        Ok((settings.max_iters, true, worst))
    }
}

/// `A x - d`.
fn residual_ax<T: Scalar>(a: &Matrix<T>, x: &[T], d: &[T]) -> Result<Vec<T>> {
    let ax = a.mul_vec(x)?;
    Ok(ax.iter().zip(d).map(|(&p, &q)| p - q).collect())
}

/// One-shot form of [`BarrierProblem::solve`].
pub fn l1_min_residual<T: Scalar>(a: &Matrix<T>, d: &[T], settings: &BarrierSettings<T>) -> Result<BarrierSolution<T>> {
    BarrierProblem::new(a)?.solve(d, settings)
}
