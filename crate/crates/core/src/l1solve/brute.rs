use super::{residual_l1, L1Solution, SolveStatus};
use crate::error::{Error, Result};
use crate::linalg::{norm1, Lu, Matrix};
use crate::scalar::Scalar;

/// Largest number of `p`-subsets [`brute_force_l1`] will enumerate.
pub const BRUTE_FORCE_LIMIT: u128 = 1_000_000;

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Exact minimum of `sum_i |(b - B x)_i|` by trying every basic solution
/// `x = B_p^{-1} b_p`. Subsets with `|det B_p| < 1e-12 ||B_p||_F^p` are
/// skipped.
pub fn brute_force_l1<T: Scalar>(b: &[T], bm: &Matrix<T>) -> Result<L1Solution<T>> {
    let (rows, p) = bm.shape();
    if b.len() != rows {
        return Err(Error::DimensionMismatch(format!("b has {} entries, B has {rows} rows", b.len())));
    }
    if p > rows {
        return Err(Error::RankDeficient(format!("B ({rows}x{p}) has more columns than rows")));
    }
    if p == 0 {
        return Ok(L1Solution { x: vec![], objective: norm1(b), active_set: vec![], status: SolveStatus::Optimal });
    }
    let count = binomial(rows, p);
    if count > BRUTE_FORCE_LIMIT {
        return Err(Error::CombinatorialLimit(count));
    }
    let mut best: Option<L1Solution<T>> = None;
    let mut idx: Vec<usize> = (0..p).collect();
    loop {
        let sub = bm.select_rows(&idx);
        let scale = sub.frobenius_norm().powi(p as i32);
        if let Ok(lu) = Lu::new(&sub) {
            if lu.det().abs() >= T::lit(1e-12) * scale {
                let bp: Vec<T> = idx.iter().map(|&i| b[i]).collect();
                let x = lu.solve(&bp)?;
                let objective = residual_l1(b, bm, &x)?;
                if best.as_ref().is_none_or(|s| objective < s.objective) {
                    best = Some(L1Solution { x, objective, active_set: idx.clone(), status: SolveStatus::Optimal });
                }
            }
        }
        // next combination in lexicographic order
        let Some(k) = (0..p).rev().find(|&k| idx[k] < rows - p + k) else { break };
        idx[k] += 1;
        for j in k + 1..p {
            idx[j] = idx[j - 1] + 1;
        }
    }
    best.ok_or_else(|| Error::RankDeficient("every p-row subsystem is singular".into()))
}
