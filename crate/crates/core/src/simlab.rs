//! Signals, noise, and the Monte Carlo engine for the complex-exponential
//! experiment.
//!
//! Every replication draws from its own `ChaCha8Rng` seeded from
//! `(master seed, replication index)`, so results do not depend on how
//! replications are scheduled across threads.

use std::f64::consts::PI;

use num_complex::{Complex, Complex64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decomp::{fourier_basis, svd, vandermonde};
use crate::error::{Error, Result};
use crate::estimator::{
    dominating_estimate_real, sorted_whole_vector_estimate, DominatingEstimate, LeastSquares, Mode, ResidualSolver,
};
use crate::l1solve::{BarrierSettings, SolveStatus, TiePolicy};
use crate::linalg::Matrix;
use crate::realiso::{matrix_to_real, real_to_vector, vector_to_real, ComplexVector};
use crate::scalar::Scalar;

/// `f(t) = sum_j xi_j z_j^t` sampled at `t = k * delta`, `k = 0..n`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExponentialModel<T> {
    pub nodes: ComplexVector<T>,
    pub amplitudes: ComplexVector<T>,
    pub delta: T,
    pub n: usize,
}

impl<T: Scalar> ExponentialModel<T> {
    pub fn validate(&self) -> Result<()> {
        let p = self.nodes.len();
        if self.amplitudes.len() != p {
            return Err(Error::DimensionMismatch(format!("{p} nodes but {} amplitudes", self.amplitudes.len())));
        }
        if p == 0 {
            return Err(Error::InvalidInput("model needs at least one node".into()));
        }
        if self.n < 2 * p {
            return Err(Error::DimensionMismatch(format!("need n >= 2p, got n={} for p={p}", self.n)));
        }
        if !(self.delta > T::zero() && self.delta.is_finite()) {
            return Err(Error::InvalidInput(format!("delta must be positive, got {}", self.delta)));
        }
        let pi = T::lit(PI);
        for (j, z) in self.nodes.iter().enumerate() {
            if !(z.re.is_finite() && z.im.is_finite()) || z.norm_sqr() == T::zero() {
                return Err(Error::InvalidInput(format!("node {j} must be finite and nonzero")));
            }
            if z.arg().abs() * self.delta > pi * (T::one() + T::epsilon()) {
                return Err(Error::InvalidInput(format!("node {j} violates |arg z| * delta <= pi")));
            }
        }
        Ok(())
    }

    pub fn p(&self) -> usize {
        self.nodes.len()
    }

    fn integer_delta(&self) -> Option<i32> {
        let r = self.delta.round();
        (r == self.delta).then(|| r.to_i32()).flatten()
    }

    /// `V(k, h) = z_h^(k delta)`, the design matrix of the samples.
    pub fn design(&self) -> Result<Matrix<Complex<T>>> {
        self.validate()?;
        match self.integer_delta() {
            Some(1) => Ok(vandermonde(&self.nodes, self.n)),
            Some(step) => Ok(Matrix::from_fn(self.n, self.p(), |k, h| self.nodes[h].powi(k as i32 * step))),
            None => {
                if let Some(j) = self.nodes.iter().position(|z| z.im == T::zero() && z.re < T::zero()) {
                    return Err(Error::BranchAmbiguity(j));
                }
                Ok(Matrix::from_fn(self.n, self.p(), |k, h| {
                    (self.nodes[h].ln() * (self.delta * T::from_usize_lossy(k))).exp()
                }))
            }
        }
    }
}

pub fn gen_signal<T: Scalar>(model: &ExponentialModel<T>) -> Result<ComplexVector<T>> {
    model.design()?.mul_vec(&model.amplitudes)
}

/// Adds complex Gaussian noise whose real and imaginary parts have variance
/// `sigma2 / 2` each.
pub fn add_noise_with<T: Scalar, R: Rng>(signal: &[Complex<T>], sigma2: T, rng: &mut R) -> Result<ComplexVector<T>> {
    if !(sigma2 >= T::zero() && sigma2.is_finite()) {
        return Err(Error::InvalidInput(format!("sigma2 must be nonnegative, got {sigma2}")));
    }
    let sd = (sigma2 * T::lit(0.5)).sqrt().to_f64().unwrap_or(0.0);
    let normal = Normal::new(0.0, sd).map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(signal
        .iter()
        .map(|&s| {
            let re = T::lit(normal.sample(rng));
            let im = T::lit(normal.sample(rng));
            s + Complex::new(re, im)
        })
        .collect())
}

pub fn add_noise<T: Scalar>(signal: &[Complex<T>], sigma2: T, seed: u64) -> Result<ComplexVector<T>> {
    add_noise_with(signal, sigma2, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// `2 min_j |xi_j|^2 / sigma2`.
pub fn snr<T: Scalar>(xi: &[Complex<T>], sigma2: T) -> T {
    let min = xi.iter().map(|z| z.norm_sqr()).fold(T::infinity(), T::min);
    T::lit(2.0) * min / sigma2
}

/// `||xi - est||_2 / ||xi||_2`.
pub fn relative_error<T: Scalar>(xi_true: &[Complex<T>], xi_est: &[Complex<T>]) -> Result<T> {
    if xi_true.len() != xi_est.len() {
        return Err(Error::DimensionMismatch(format!("{} vs {} entries", xi_true.len(), xi_est.len())));
    }
    let den: T = xi_true.iter().map(|z| z.norm_sqr()).sum();
    if den == T::zero() {
        return Err(Error::InvalidInput("true parameter vector is zero".into()));
    }
    let num: T = xi_true.iter().zip(xi_est).map(|(a, b)| (a - b).norm_sqr()).sum();
    Ok((num / den).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` increasing edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

pub const DEFAULT_BINS: usize = 30;

/// Equal-width bins over `[min, max]` of the values.
pub fn histogram(values: &[f64], bins: usize) -> Result<Histogram> {
    if values.is_empty() {
        return Err(Error::InvalidInput("histogram of no values".into()));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    histogram_range(values, bins, lo, hi)
}

/// Equal-width bins over `[lo, hi]`; values outside are clamped into the
/// end bins. A degenerate range is widened to unit width.
pub fn histogram_range(values: &[f64], bins: usize, lo: f64, hi: f64) -> Result<Histogram> {
    if bins == 0 {
        return Err(Error::InvalidInput("histogram needs at least one bin".into()));
    }
    if values.iter().any(|v| !v.is_finite()) || !lo.is_finite() || !hi.is_finite() || hi < lo {
        return Err(Error::NonFinite("histogram input"));
    }
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|k| if k == bins { hi } else { lo + width * k as f64 }).collect();
    let mut counts = vec![0; bins];
    for &v in values {
        let k = (((v - lo) / width).floor().max(0.0) as usize).min(bins - 1);
        counts[k] += 1;
    }
    Ok(Histogram { edges, counts })
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k == 0 {
        f64::NAN
    } else if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Seed of replication `index` under `master`.
pub fn replication_seed(master: u64, index: u64) -> u64 {
    fn splitmix64(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    splitmix64(splitmix64(master) ^ index)
}

/// A node as a complex value or as `exp(decay + 2 pi i freq)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NodeSpec {
    Value(Complex64),
    DecayFreq { decay: f64, freq: f64 },
}

impl NodeSpec {
    pub fn value(&self) -> Complex64 {
        match *self {
            NodeSpec::Value(z) => z,
            NodeSpec::DecayFreq { decay, freq } => Complex64::new(decay, 2.0 * PI * freq).exp(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// Compare the leading `p` entries of the solution with `xi`.
    #[default]
    Parameters,
    /// Compare the `p` largest-modulus entries of the whole solution with
    /// `xi` sorted by decreasing modulus.
    WholeVectorSorted,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMode {
    Equality,
    #[default]
    Residual,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalConfig {
    pub nodes: Vec<NodeSpec>,
    pub amplitudes: Vec<Complex64>,
    #[serde(default = "one")]
    pub delta: f64,
    pub n: usize,
}

fn one() -> f64 {
    1.0
}

fn default_bins() -> usize {
    DEFAULT_BINS
}

/// Run description, as read from a JSON config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<u32>,
    #[serde(default)]
    pub name: String,
    pub model: SignalConfig,
    pub sigma2: f64,
    pub replications: usize,
    /// Extended dimension; the noise basis has `m - p` columns. Default `2n`.
    #[serde(default)]
    pub m: Option<usize>,
    /// Residual bound. Default `sqrt(sigma2) / 100`.
    #[serde(default)]
    pub tau: Option<f64>,
    pub seed: u64,
    #[serde(default)]
    pub mode: SolveMode,
    #[serde(default)]
    pub estimator: EstimatorKind,
    #[serde(default = "default_bins")]
    pub bins: usize,
}

impl ExperimentConfig {
    pub fn exponential_model(&self) -> ExponentialModel<f64> {
        ExponentialModel {
            nodes: self.model.nodes.iter().map(NodeSpec::value).collect(),
            amplitudes: self.model.amplitudes.clone(),
            delta: self.model.delta,
            n: self.model.n,
        }
    }

    pub fn m(&self) -> usize {
        self.m.unwrap_or(2 * self.model.n)
    }

    pub fn tau(&self) -> f64 {
        self.tau.unwrap_or(self.sigma2.sqrt() / 100.0)
    }

    pub fn validate(&self) -> Result<()> {
        self.exponential_model().validate()?;
        let (n, p) = (self.model.n, self.model.nodes.len());
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::InvalidInput(format!("sigma2 must be positive, got {}", self.sigma2)));
        }
        if self.replications == 0 {
            return Err(Error::InvalidInput("replications must be at least 1".into()));
        }
        if self.m() < p + n {
            return Err(Error::NoiseBasisTooNarrow { rows: n, cols: self.m().saturating_sub(p) });
        }
        if !(self.tau() > 0.0 && self.tau().is_finite()) {
            return Err(Error::InvalidInput(format!("tau must be positive, got {}", self.tau())));
        }
        if self.bins == 0 {
            return Err(Error::InvalidInput("bins must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub index: usize,
    pub seed_used: u64,
    /// `None` when the solver failed.
    pub e_d: Option<f64>,
    pub e_ls: Option<f64>,
    pub solver_status: SolveStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub mean: f64,
    pub median: f64,
    pub std: f64,
}

impl ErrorStats {
    fn of(values: &[f64]) -> Self {
        let m = mean(values);
        let var = values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len().max(2) - 1) as f64;
        Self { mean: m, median: median(values), std: var.sqrt() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub replications: usize,
    pub failures: usize,
    pub sigma2: f64,
    pub snr: f64,
    pub n: usize,
    pub m: usize,
    pub tau: f64,
    pub condition_number: f64,
    pub e_d: ErrorStats,
    pub e_ls: ErrorStats,
    /// Shared bin edges for both error histograms.
    pub histogram_edges: Vec<f64>,
    pub histogram_d: Vec<usize>,
    pub histogram_ls: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentOutput {
    pub records: Vec<ReplicationRecord>,
    pub summary: ExperimentSummary,
}

/// Per-design data shared by all replications.
struct Prepared {
    signal: ComplexVector<f64>,
    xi: ComplexVector<f64>,
    p: usize,
    v: Matrix<f64>,
    ve: Matrix<f64>,
    ls: LeastSquares<f64>,
    residual: Option<ResidualSolver<f64>>,
    settings: BarrierSettings<f64>,
    mode: SolveMode,
    estimator: EstimatorKind,
    sigma2: f64,
}

impl Prepared {
    fn new(cfg: &ExperimentConfig) -> Result<(Self, f64)> {
        cfg.validate()?;
        let model = cfg.exponential_model();
        let vc = model.design()?;
        let signal = vc.mul_vec(&model.amplitudes)?;
        let vec_c = fourier_basis::<f64>(cfg.model.n, cfg.m() - model.p())?;
        let v = matrix_to_real(&vc)?;
        let ve = matrix_to_real(&vec_c)?;
        let cond = svd(&v)?.condition_number();
        let ls = LeastSquares::new(&v)?;
        let residual = match cfg.mode {
            SolveMode::Residual => Some(ResidualSolver::new(&v.hstack(&ve)?)?),
            SolveMode::Equality => None,
        };
        let prepared = Self {
            signal,
            xi: model.amplitudes.clone(),
            p: model.p(),
            v,
            ve,
            ls,
            residual,
            settings: BarrierSettings::new(cfg.tau()),
            mode: cfg.mode,
            estimator: cfg.estimator,
            sigma2: cfg.sigma2,
        };
        Ok((prepared, cond))
    }

    fn replicate(&self, index: usize, seed: u64) -> ReplicationRecord {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let outcome = add_noise_with(&self.signal, self.sigma2, &mut rng).and_then(|d| {
            let dr = vector_to_real(&d)?;
            let xi_ls = real_to_vector(&self.ls.solve(&dr)?)?;
            let e_ls = relative_error(&self.xi, &xi_ls)?;
            let (x, objective, status) = match (&self.residual, self.mode) {
                (Some(solver), SolveMode::Residual) => solver.solve(&dr, &self.settings)?,
                _ => {
                    let est =
                        dominating_estimate_real(&self.v, &self.ve, &dr, &Mode::Equality, TiePolicy::Randomize(seed))?;
                    let mut x = est.xi_d;
                    x.extend(est.eta_hat);
                    (x, est.objective, est.solver_status)
                }
            };
            let p2 = 2 * self.p;
            let est = DominatingEstimate {
                xi_d: real_to_vector(&x[..p2])?,
                eta_hat: real_to_vector(&x[p2..])?,
                objective,
                solver_status: status,
            };
            let e_d = match self.estimator {
                EstimatorKind::Parameters => relative_error(&self.xi, &est.xi_d)?,
                EstimatorKind::WholeVectorSorted => {
                    let mut truth = self.xi.clone();
                    truth.sort_by(|a, b| b.norm_sqr().total_cmp(&a.norm_sqr()));
                    relative_error(&truth, &sorted_whole_vector_estimate(&est, self.p))?
                }
            };
            Ok((e_d, e_ls, status))
        });
        match outcome {
            Ok((e_d, e_ls, status)) => {
                ReplicationRecord { index, seed_used: seed, e_d: Some(e_d), e_ls: Some(e_ls), solver_status: status }
            }
            Err(err) => {
                log::warn!("replication {index} failed: {err}");
                let status = match err {
                    Error::MaxIterations(_) => SolveStatus::MaxIter,
                    _ => SolveStatus::Infeasible,
                };
                ReplicationRecord { index, seed_used: seed, e_d: None, e_ls: None, solver_status: status }
            }
        }
    }
}

/// Runs all replications (in parallel on the current rayon pool) and
/// summarizes them. Per-replication failures are recorded, not returned.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let (prepared, cond) = Prepared::new(cfg)?;
    log::info!(
        "running {} replications: n={}, m={}, sigma2={}, tau={}, cond(V)={cond:.3e}",
        cfg.replications,
        cfg.model.n,
        cfg.m(),
        cfg.sigma2,
        cfg.tau()
    );
    let records: Vec<ReplicationRecord> = (0..cfg.replications)
        .into_par_iter()
        .map(|i| prepared.replicate(i, replication_seed(cfg.seed, i as u64)))
        .collect();
    let summary = summarize(cfg, &prepared.xi, cond, &records)?;
    Ok(ExperimentOutput { records, summary })
}

fn summarize(
    cfg: &ExperimentConfig,
    xi: &[Complex64],
    cond: f64,
    records: &[ReplicationRecord],
) -> Result<ExperimentSummary> {
    let ok: Vec<&ReplicationRecord> = records.iter().filter(|r| r.e_d.is_some() && r.e_ls.is_some()).collect();
    if ok.is_empty() {
        return Err(Error::Infeasible("every replication failed".into()));
    }
    let e_d: Vec<f64> = ok.iter().filter_map(|r| r.e_d).collect();
    let e_ls: Vec<f64> = ok.iter().filter_map(|r| r.e_ls).collect();
    let lo = e_d.iter().chain(&e_ls).copied().fold(f64::INFINITY, f64::min);
    let hi = e_d.iter().chain(&e_ls).copied().fold(f64::NEG_INFINITY, f64::max);
    let hd = histogram_range(&e_d, cfg.bins, lo, hi)?;
    let hls = histogram_range(&e_ls, cfg.bins, lo, hi)?;
    Ok(ExperimentSummary {
        replications: records.len(),
        failures: records.len() - ok.len(),
        sigma2: cfg.sigma2,
        snr: snr(xi, cfg.sigma2),
        n: cfg.model.n,
        m: cfg.m(),
        tau: cfg.tau(),
        condition_number: cond,
        e_d: ErrorStats::of(&e_d),
        e_ls: ErrorStats::of(&e_ls),
        histogram_edges: hd.edges,
        histogram_d: hd.counts,
        histogram_ls: hls.counts,
    })
}

/// Empirical squared-error comparison on a real model `d = V xi + Ve eta`
/// with `eta ~ N(0, sigma2 I)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MseStudy {
    pub mse_d: f64,
    pub mse_ls: f64,
    pub se_d: f64,
    pub se_ls: f64,
    /// Standard error of the paired difference `mse_ls - mse_d`.
    pub se_diff: f64,
    pub replications: usize,
    pub failures: usize,
}

impl MseStudy {
    /// `(mse_ls - mse_d) / se_diff`.
    pub fn gap_in_standard_errors(&self) -> f64 {
        (self.mse_ls - self.mse_d) / self.se_diff
    }
}

pub fn mse_study_real(
    v: &Matrix<f64>,
    ve: &Matrix<f64>,
    xi: &[f64],
    sigma2: f64,
    replications: usize,
    seed: u64,
) -> Result<MseStudy> {
    if replications < 2 {
        return Err(Error::InvalidInput("need at least two replications".into()));
    }
    let signal = v.mul_vec(xi)?;
    let ls = LeastSquares::new(v)?;
    let normal = Normal::new(0.0, sigma2.sqrt()).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let sq = |a: &[f64]| -> f64 { a.iter().zip(xi).map(|(x, t)| (x - t).powi(2)).sum() };
    let pairs: Vec<Option<(f64, f64)>> = (0..replications)
        .into_par_iter()
        .map(|i| {
            let s = replication_seed(seed, i as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let eta: Vec<f64> = (0..ve.cols()).map(|_| normal.sample(&mut rng)).collect();
            let noise = ve.mul_vec(&eta).ok()?;
            let d: Vec<f64> = signal.iter().zip(&noise).map(|(a, b)| a + b).collect();
            let xls = ls.solve(&d).ok()?;
            let est = dominating_estimate_real(v, ve, &d, &Mode::Equality, TiePolicy::Randomize(s));
            match est {
                Ok(est) => Some((sq(&est.xi_d), sq(&xls))),
                Err(err) => {
                    log::warn!("replication {i} failed: {err}");
                    None
                }
            }
        })
        .collect();
    let ok: Vec<(f64, f64)> = pairs.iter().flatten().copied().collect();
    let k = ok.len() as f64;
    if ok.len() < 2 {
        return Err(Error::Infeasible("too few successful replications".into()));
    }
    let stats = |vals: &mut dyn Iterator<Item = f64>| -> (f64, f64) {
        let v: Vec<f64> = vals.collect();
        let m = mean(&v);
        let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (k - 1.0);
        (m, (var / k).sqrt())
    };
    let (mse_d, se_d) = stats(&mut ok.iter().map(|p| p.0));
    let (mse_ls, se_ls) = stats(&mut ok.iter().map(|p| p.1));
    let (_, se_diff) = stats(&mut ok.iter().map(|p| p.1 - p.0));
    Ok(MseStudy { mse_d, mse_ls, se_d, se_ls, se_diff, replications, failures: replications - ok.len() })
}
