mod common;

use common::*;
use l1dom::decomp::{design_noise_basis, fourier_basis, gsvd, vandermonde};
use l1dom::estimator::{
    closed_form_gsvd, dominating_estimate_real, mse_d_from_factors, mse_ls_real, threshold_from_factors, Mode,
};
use l1dom::l1solve::{brute_force_l1, l1_fit, l1_min_residual, BarrierSettings, SolveStatus, TiePolicy};
use l1dom::linalg::{norm2, Lu, Matrix};
use l1dom::realiso::{matrix_to_real, vector_to_real};
use l1dom::simlab::{run_experiment, ExperimentConfig};
use l1dom::Complex64;
use proptest::prelude::*;
use rand::Rng;

fn complex_matrix(seed: u64, rows: usize, cols: usize) -> Matrix<Complex64> {
    let mut r = rng(seed);
    let re = gaussian(&mut r, rows, cols);
    let im = gaussian(&mut r, rows, cols);
    Matrix::from_fn(rows, cols, |i, j| Complex64::new(re[(i, j)], im[(i, j)]))
}

fn residual(b: &[f64], bm: &Matrix<f64>, x: &[f64]) -> Vec<f64> {
    let bx = bm.mul_vec(x).unwrap();
    b.iter().zip(&bx).map(|(u, v)| u - v).collect()
}

/// Minimum of the sign-constrained LP over `M+ = {r >= 0}`, `M- = {r < 0}`
/// by enumerating its vertices.
fn sign_constrained_optimum(b: &[f64], bm: &Matrix<f64>, signs: &[f64]) -> f64 {
    let (rows, p) = bm.shape();
    let mut best = f64::INFINITY;
    let mut idx: Vec<usize> = (0..p).collect();
    loop {
        if let Ok(lu) = Lu::new(&bm.select_rows(&idx)) {
            if lu.det().abs() > 1e-10 {
                let bs: Vec<f64> = idx.iter().map(|&i| b[i]).collect();
                let x = lu.solve(&bs).unwrap();
                let r = residual(b, bm, &x);
                if r.iter().zip(signs).all(|(ri, s)| ri * s >= -1e-9) {
                    best = best.min(r.iter().zip(signs).map(|(ri, s)| ri * s).sum());
                }
            }
        }
        let Some(k) = (0..p).rev().find(|&k| idx[k] < rows - p + k) else { break };
        idx[k] += 1;
        for t in k + 1..p {
            idx[t] = idx[t - 1] + 1;
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn isomorph_preserves_products(seed in any::<u64>(), rows in 1usize..6, cols in 1usize..6) {
        let x = complex_matrix(seed, rows, cols);
        let v: Vec<Complex64> = complex_matrix(seed ^ 1, cols, 1).col(0);
        let lhs = matrix_to_real(&x).unwrap().mul_vec(&vector_to_real(&v).unwrap()).unwrap();
        let rhs = vector_to_real(&x.mul_vec(&v).unwrap()).unwrap();
        prop_assert!(max_abs_diff(&lhs, &rhs) < 1e-12);
        let nv = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        prop_assert!((norm2(&vector_to_real(&v).unwrap()) - nv).abs() <= 1e-14 * nv.max(1.0));
    }

    #[test]
    fn isomorph_is_multiplicative(seed in any::<u64>()) {
        let x = complex_matrix(seed, 4, 4);
        let y = complex_matrix(seed.wrapping_add(7), 4, 4);
        let lhs = matrix_to_real(&x.matmul(&y).unwrap()).unwrap();
        let rhs = matrix_to_real(&x).unwrap().matmul(&matrix_to_real(&y).unwrap()).unwrap();
        prop_assert!(max_abs_diff(lhs.as_slice(), rhs.as_slice()) < 1e-10);
    }

    #[test]
    fn gsvd_reconstructs_and_pairs_are_normalized(seed in any::<u64>(), n in 2usize..12, extra in 0usize..4, pfrac in 0.0f64..1.0) {
        let p = 1 + ((n - 1) as f64 * pfrac) as usize;
        let mut r = rng(seed);
        let v = gaussian(&mut r, n, p);
        let ve = gaussian(&mut r, n, n + extra);
        let f = gsvd(&v, &ve).unwrap();
        let ev = f.reconstruct_v().sub(&v).unwrap().frobenius_norm() / v.frobenius_norm();
        let eve = f.reconstruct_ve().sub(&ve).unwrap().frobenius_norm() / ve.frobenius_norm();
        prop_assert!(ev < 1e-8, "V reconstruction {ev}");
        prop_assert!(eve < 1e-8, "Ve reconstruction {eve}");
        for (a, b) in f.alphas.iter().zip(&f.betas) {
            prop_assert!((a * a + b * b - 1.0).abs() < 1e-10);
        }
        prop_assert!(f.alphas.windows(2).all(|w| w[0] <= w[1] + 1e-12));
        prop_assert!(f.betas.windows(2).all(|w| w[0] + 1e-12 >= w[1]));
    }

    #[test]
    fn gsvd_ratios_ignore_rotations_of_the_noise_basis(seed in any::<u64>(), n in 2usize..9, p in 1usize..4, extra in 0usize..3) {
        prop_assume!(p <= n);
        let mut r = rng(seed);
        let v = gaussian(&mut r, n, p);
        let ve = gaussian(&mut r, n, n + extra);
        let q = orthogonal(&mut r, n + extra);
        let a = gsvd(&v, &ve).unwrap().ratios();
        let b = gsvd(&v, &ve.matmul(&q).unwrap()).unwrap().ratios();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-8 * x.max(1.0), "{x} vs {y}");
        }
    }

    #[test]
    fn structured_matrices_match_direct_powers(re in -1.2f64..1.2, im in -1.2f64..1.2, n in 1usize..12, w in 12usize..20) {
        let z = Complex64::new(re, im);
        let v = vandermonde(&[z], n);
        let mut direct = Complex64::new(1.0, 0.0);
        for k in 0..n {
            prop_assert!((v[(k, 0)] - direct).norm() <= 1e-13 * direct.norm().max(1.0));
            direct *= z;
        }
        let f = fourier_basis::<f64>(n, w).unwrap();
        for k in 0..n {
            for h in 0..w {
                let e = Complex64::new(0.0, 2.0 * std::f64::consts::PI * (k * h) as f64 / w as f64).exp();
                prop_assert!((f[(k, h)] - e).norm() <= 1e-13);
            }
        }
    }

    #[test]
    fn l1_fit_returns_a_basic_solution(seed in any::<u64>(), rows in 2usize..12, p in 1usize..4) {
        prop_assume!(p < rows);
        let mut r = rng(seed);
        let bm = gaussian(&mut r, rows, p);
        let b = gaussian_vec(&mut r, rows);
        let sol = l1_fit(&b, &bm, TiePolicy::FirstBasis).unwrap();
        prop_assert_eq!(sol.status, SolveStatus::Optimal);
        prop_assert_eq!(sol.active_set.len(), p);
        let res = residual(&b, &bm, &sol.x);
        prop_assert!((res.iter().map(|v| v.abs()).sum::<f64>() - sol.objective).abs() < 1e-9);
        for (i, ri) in res.iter().enumerate() {
            if sol.active_set.contains(&i) {
                prop_assert!(ri.abs() < 1e-9);
            } else {
                prop_assert!(ri.abs() > 1e-12, "extra zero residual at row {i}");
            }
        }
        let lu = Lu::new(&bm.select_rows(&sol.active_set)).unwrap();
        let bp: Vec<f64> = sol.active_set.iter().map(|&i| b[i]).collect();
        prop_assert!(max_abs_diff(&lu.solve(&bp).unwrap(), &sol.x) < 1e-9);
    }

    #[test]
    fn l1_optimum_equals_its_sign_constrained_lp(seed in any::<u64>(), rows in 2usize..10, p in 1usize..4) {
        prop_assume!(p < rows);
        let mut r = rng(seed);
        let bm = gaussian(&mut r, rows, p);
        let b = gaussian_vec(&mut r, rows);
        let sol = l1_fit(&b, &bm, TiePolicy::FirstBasis).unwrap();
        let signs: Vec<f64> = residual(&b, &bm, &sol.x).iter().map(|&v| if v >= -1e-12 { 1.0 } else { -1.0 }).collect();
        let w = sign_constrained_optimum(&b, &bm, &signs);
        prop_assert!((w - sol.objective).abs() < 1e-9, "z* = {}, w* = {w}", sol.objective);
    }

    #[test]
    fn l1_fit_agrees_with_enumeration(seed in any::<u64>(), rows in 2usize..12, p in 1usize..4) {
        prop_assume!(p < rows);
        let mut r = rng(seed);
        let bm = gaussian(&mut r, rows, p);
        let b = gaussian_vec(&mut r, rows);
        let fit = l1_fit(&b, &bm, TiePolicy::FirstBasis).unwrap();
        let brute = brute_force_l1(&b, &bm).unwrap();
        prop_assert!((fit.objective - brute.objective).abs() < 1e-8);
    }

    #[test]
    fn l1_fit_is_scale_equivariant(seed in any::<u64>(), rows in 2usize..10, p in 1usize..4, c in 0.01f64..100.0) {
        prop_assume!(p < rows);
        let mut r = rng(seed);
        let bm = gaussian(&mut r, rows, p);
        let b = gaussian_vec(&mut r, rows);
        let base = l1_fit(&b, &bm, TiePolicy::FirstBasis).unwrap();
        let cb: Vec<f64> = b.iter().map(|v| c * v).collect();
        let scaled = l1_fit(&cb, &bm, TiePolicy::FirstBasis).unwrap();
        prop_assert!((scaled.objective - c * base.objective).abs() < 1e-9 * c.max(1.0) * (1.0 + base.objective));
        let cx: Vec<f64> = base.x.iter().map(|v| c * v).collect();
        prop_assert!(max_abs_diff(&scaled.x, &cx) < 1e-8 * c.max(1.0));
    }

    #[test]
    fn barrier_iterates_stay_feasible(seed in any::<u64>(), n in 2usize..8, extra in 1usize..8, frac in 0.01f64..0.9) {
        let mut r = rng(seed);
        let a = gaussian(&mut r, n, n + extra);
        let d = gaussian_vec(&mut r, n);
        let tau = frac * norm2(&d);
        let sol = l1_min_residual(&a, &d, &BarrierSettings::new(tau)).unwrap();
        prop_assert!(sol.max_residual < tau, "max residual {} vs tau {tau}", sol.max_residual);
        let final_res = norm2(&residual(&d, &a, &sol.x));
        prop_assert!(final_res < tau);
    }
}

/// `sigma2 * ||V^+ Ve||_F^2`: the least-squares MSE when the noise is
/// `Ve eta` with `eta ~ N(0, sigma2 I)`, computed column by column.
fn mse_ls_coloured(v: &Matrix<f64>, ve: &Matrix<f64>, sigma2: f64) -> f64 {
    let ls = l1dom::estimator::LeastSquares::new(v).unwrap();
    (0..ve.cols()).map(|j| ls.solve(&ve.col(j)).unwrap().iter().map(|x| x * x).sum::<f64>()).sum::<f64>() * sigma2
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn domination_above_the_threshold(seed in any::<u64>(), n in 3usize..8, p in 2usize..4, lift in 1.1f64..5.0) {
        prop_assume!(p <= n);
        let mut r = rng(seed);
        let shrunk = r.random_range(1..=p);
        let v = gaussian(&mut r, n, p);
        let ve = design_noise_basis(&v, &separated_ratios(&mut r, p, shrunk)).unwrap();
        let xi = gaussian_vec(&mut r, p);
        let f = gsvd(&v, &ve).unwrap();
        let rep = threshold_from_factors(&f, &f.transform_params(&xi).unwrap()).unwrap();
        prop_assert!(rep.q < p);
        let th = rep.sigma2_threshold;
        let at_th = mse_d_from_factors(&f, &rep.xi_tilde, th);
        prop_assert!((at_th - mse_ls_coloured(&v, &ve, th)).abs() < 1e-10 * (1.0 + at_th));
        let s2 = th * lift;
        prop_assert!(mse_d_from_factors(&f, &rep.xi_tilde, s2) < mse_ls_coloured(&v, &ve, s2));
    }

    #[test]
    fn closed_form_error_is_orthogonally_invariant(seed in any::<u64>(), n in 3usize..8, p in 1usize..4) {
        prop_assume!(p <= n);
        let mut r = rng(seed);
        let v = gaussian(&mut r, n, p);
        let ve = gaussian(&mut r, n, n + 1);
        let xi = gaussian_vec(&mut r, p);
        let d = gaussian_vec(&mut r, n);
        let f = gsvd(&v, &ve).unwrap();
        let xt_d = closed_form_gsvd(&f, &f.transform_data(&d).unwrap());
        let xi_d = f.untransform_params(&xt_d).unwrap();
        let xt = f.transform_params(&xi).unwrap();
        let a: Vec<f64> = xt.iter().zip(&xt_d).map(|(u, w)| u - w).collect();
        let b: Vec<f64> = xi.iter().zip(&xi_d).map(|(u, w)| u - w).collect();
        prop_assert!((norm2(&a) - norm2(&b)).abs() < 1e-10 * (1.0 + norm2(&b)));
    }

    #[test]
    fn solver_matches_closed_form_on_permutation_designs(seed in any::<u64>(), n in 2usize..7, p in 1usize..4, extra in 0usize..3) {
        prop_assume!(p <= n);
        let mut r = rng(seed);
        let shrunk = r.random_range(0..=p);
        let ratios = separated_ratios(&mut r, p, shrunk);
        let x = invertible(&mut r, n);
        let u1 = signed_permutation(&mut r, p);
        let u2 = signed_permutation(&mut r, n + extra);
        let (_, v, ve) = from_factors(x, &ratios, u1, u2);
        let d = gaussian_vec(&mut r, n);
        let est = dominating_estimate_real(&v, &ve, &d, &Mode::Equality, TiePolicy::FirstBasis).unwrap();
        let f = gsvd(&v, &ve).unwrap();
        let closed = f.untransform_params(&closed_form_gsvd(&f, &f.transform_data(&d).unwrap())).unwrap();
        prop_assert!(max_abs_diff(&est.xi_d, &closed) < 1e-6, "{:?} vs {closed:?}", est.xi_d);
    }

    #[test]
    fn mse_ls_trace_and_singular_value_forms_agree(seed in any::<u64>(), n in 1usize..10, pfrac in 0.0f64..1.0, sigma2 in 0.01f64..10.0) {
        let p = 1 + ((n - 1) as f64 * pfrac) as usize;
        let v = gaussian(&mut rng(seed), n, p);
        let inv = Lu::new(&v.gram()).unwrap().inverse().unwrap();
        let trace: f64 = (0..p).map(|i| inv[(i, i)]).sum::<f64>() * sigma2;
        let sv = mse_ls_real(&v, sigma2).unwrap();
        prop_assert!((trace - sv).abs() < 1e-9 * (1.0 + trace));
    }

    #[test]
    fn closed_form_mse_splits_into_bias_and_variance(seed in any::<u64>(), n in 3usize..8, p in 1usize..4, sigma2 in 0.01f64..10.0) {
        prop_assume!(p <= n);
        let mut r = rng(seed);
        let shrunk = r.random_range(0..=p);
        let v = gaussian(&mut r, n, p);
        let ve = design_noise_basis(&v, &separated_ratios(&mut r, p, shrunk)).unwrap();
        let xi = gaussian_vec(&mut r, p);
        let f = gsvd(&v, &ve).unwrap();
        let rep = threshold_from_factors(&f, &f.transform_params(&xi).unwrap()).unwrap();
        let kept: f64 = f.ratios()[p - rep.q..].iter().map(|x| x * x).sum();
        let mse = mse_d_from_factors(&f, &rep.xi_tilde, sigma2);
        prop_assert!((mse - sigma2 * kept - rep.bias2).abs() < 1e-12 * (1.0 + mse));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn experiments_are_reproducible(seed in any::<u64>(), equality in any::<bool>()) {
        let cfg: ExperimentConfig = serde_json::from_value(serde_json::json!({
            "model": {"nodes": [[0.9, 0.1], [0.5, -0.6]], "amplitudes": [[2, 0], [1, 1]], "n": 8},
            "sigma2": 0.5, "replications": 4, "seed": seed,
            "mode": if equality { "equality" } else { "residual" }
        })).unwrap();
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        prop_assert_eq!(&a.records, &b.records);
        for (x, y) in a.records.iter().zip(&b.records) {
            prop_assert_eq!(x.e_d.map(f64::to_bits), y.e_d.map(f64::to_bits));
            prop_assert_eq!(x.e_ls.map(f64::to_bits), y.e_ls.map(f64::to_bits));
        }
    }
}
