use std::path::Path;

use l1dom::decomp::{design_noise_basis, gsvd};
use l1dom::estimator::{
    convenience_from_report, dominating_estimate, domination_threshold, least_squares, Convenience, Mode,
};
use l1dom::l1solve::{SolveStatus, TiePolicy};
use l1dom::simlab::{run_experiment, ExperimentConfig, ExperimentSummary, ReplicationRecord};
use l1dom::{BarrierSettings, CMatrix, Complex64, LinearModel};
use serde::Serialize;
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::io::{
    check_schema, ensure_dir, is_real, matrix_rows, read_json, to_matrix, to_vector, write_atomic, write_json,
    DataFile, ModelFile, RatiosFile, XiFile, SCHEMA_VERSION,
};
use crate::manifest::RunClock;
use crate::svg::histogram_overlay;
use crate::{DesignBasisArgs, EstimateArgs, ModeArg, SimulateArgs, ThresholdArgs};

pub const ESTIMATE_FILE: &str = "estimate.json";
pub const RECORDS_FILE: &str = "records.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const HISTOGRAM_FILE: &str = "histograms.svg";
pub const THRESHOLD_FILE: &str = "threshold.json";
pub const VE_FILE: &str = "ve.json";
pub const VERIFICATION_FILE: &str = "verification.json";

struct LoadedModel {
    v: CMatrix,
    ve: Option<CMatrix>,
    sigma2: Option<f64>,
}

fn load_model(path: &Path) -> CliResult<LoadedModel> {
    let file: ModelFile = read_json(path)?;
    check_schema(path, file.schema_version)?;
    let v = to_matrix(path, "v", &file.v)?;
    let ve = file.ve.as_deref().map(|rows| to_matrix(path, "ve", rows)).transpose()?;
    Ok(LoadedModel { v, ve, sigma2: file.sigma2 })
}

/// Model with a noise basis, validated.
fn full_model(path: &Path) -> CliResult<(LinearModel, Option<f64>)> {
    let m = load_model(path)?;
    let ve = m.ve.ok_or_else(|| CliError::Parse { path: path.to_path_buf(), message: "missing field `ve`".into() })?;
    let model = LinearModel::new(m.v, ve, m.sigma2.unwrap_or(0.0))?;
    Ok((model, m.sigma2))
}

#[derive(Serialize)]
struct EstimateOutput {
    schema_version: u32,
    mode: ModeArg,
    tau: Option<f64>,
    seed: Option<u64>,
    xi_ls: Vec<Complex64>,
    xi_d: Vec<Complex64>,
    eta_hat: Vec<Complex64>,
    objective: f64,
    solver_status: SolveStatus,
}

pub fn estimate(args: &EstimateArgs) -> CliResult<()> {
    let clock = RunClock::start();
    let (model, sigma2) = full_model(&args.model)?;
    let data: DataFile = read_json(&args.data)?;
    check_schema(&args.data, data.schema_version)?;
    let d = to_vector(&data.d);
    if d.len() != model.n() {
        return Err(CliError::Dimension(format!("d has {} entries but V has {} rows", d.len(), model.n())));
    }
    let (mode, tau) = match args.mode {
        ModeArg::Equality => (Mode::Equality, None),
        ModeArg::Residual => {
            let tau = match (args.tau, sigma2) {
                (Some(t), _) => t,
                (None, Some(s2)) => s2.sqrt() / 100.0,
                (None, None) => {
                    return Err(CliError::Invalid("residual mode needs --tau or `sigma2` in the model file".into()))
                }
            };
            let settings = BarrierSettings::new(tau);
            settings.validate()?;
            (Mode::Residual(settings), Some(tau))
        }
    };
    let policy = args.seed.map_or(TiePolicy::FirstBasis, TiePolicy::Randomize);
    let xi_ls = least_squares(&model.v, &d)?;
    let est = dominating_estimate(&model, &d, &mode, policy)?;
    if !est.solver_status.is_success() {
        return Err(CliError::Solver(format!("solver stopped with status {:?}", est.solver_status)));
    }
    ensure_dir(&args.out)?;
    let out = EstimateOutput {
        schema_version: SCHEMA_VERSION,
        mode: args.mode,
        tau,
        seed: args.seed,
        xi_ls,
        xi_d: est.xi_d,
        eta_hat: est.eta_hat,
        objective: est.objective,
        solver_status: est.solver_status,
    };
    write_json(&args.out.join(ESTIMATE_FILE), &out)?;
    let summary = json!({ "objective": out.objective, "solver_status": out.solver_status });
    clock.finish("estimate", json!(args), None, &args.out, &[ESTIMATE_FILE], summary)?;
    log::info!("estimate written to {}", args.out.display());
    Ok(())
}

#[derive(Serialize)]
struct CsvRow {
    schema_version: u32,
    index: usize,
    seed_used: u64,
    e_d: Option<f64>,
    e_ls: Option<f64>,
    solver_status: SolveStatus,
}

/// One row per replication, in index order.
pub fn records_csv(records: &[ReplicationRecord]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        let row = CsvRow {
            schema_version: SCHEMA_VERSION,
            index: r.index,
            seed_used: r.seed_used,
            e_d: r.e_d,
            e_ls: r.e_ls,
            solver_status: r.solver_status,
        };
        w.serialize(row).map_err(|e| CliError::Invalid(format!("csv: {e}")))?;
    }
    w.into_inner().map_err(|e| CliError::Invalid(format!("csv: {e}")))
}

#[derive(Serialize)]
struct SummaryOutput<'a> {
    schema_version: u32,
    name: &'a str,
    config: &'a ExperimentConfig,
    #[serde(flatten)]
    summary: &'a ExperimentSummary,
}

pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    let clock = RunClock::start();
    let cfg: ExperimentConfig = read_json(&args.config)?;
    check_schema(&args.config, cfg.schema_version)?;
    cfg.validate()?;
    let output = match args.threads {
        Some(0) => return Err(CliError::Invalid("--threads must be at least 1".into())),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| CliError::Invalid(format!("cannot start {k} threads: {e}")))?
            .install(|| run_experiment(&cfg))?,
        None => run_experiment(&cfg)?,
    };
    let s = &output.summary;
    if s.failures > 0 {
        log::warn!("{} of {} replications failed", s.failures, s.replications);
    }
    ensure_dir(&args.out)?;
    write_atomic(&args.out.join(RECORDS_FILE), &records_csv(&output.records)?)?;
    write_json(
        &args.out.join(SUMMARY_FILE),
        &SummaryOutput { schema_version: SCHEMA_VERSION, name: &cfg.name, config: &cfg, summary: s },
    )?;
    let title = format!(
        "{} (sigma2 = {}, R = {})",
        if cfg.name.is_empty() { "experiment" } else { &cfg.name },
        cfg.sigma2,
        s.replications
    );
    let svg = histogram_overlay(&title, &s.histogram_edges, &s.histogram_d, &s.histogram_ls);
    write_atomic(&args.out.join(HISTOGRAM_FILE), svg.as_bytes())?;
    let summary = json!({
        "replications": s.replications,
        "failures": s.failures,
        "snr": s.snr,
        "mean_e_d": s.e_d.mean,
        "mean_e_ls": s.e_ls.mean,
    });
    clock.finish(
        "simulate",
        json!(args),
        Some(&args.config),
        &args.out,
        &[RECORDS_FILE, SUMMARY_FILE, HISTOGRAM_FILE],
        summary,
    )?;
    log::info!("mean E_D = {:.4}, mean E_LS = {:.4}", s.e_d.mean, s.e_ls.mean);
    Ok(())
}

#[derive(Serialize)]
#[serde(rename_all = "snake_case")]
enum Regime {
    Threshold,
    AlwaysDominated,
}

#[derive(Serialize)]
struct ThresholdOutput {
    schema_version: u32,
    regime: Regime,
    /// With `--tau-b` this is the worst case `tau_b / variance_sum`.
    sigma2_threshold: f64,
    q: usize,
    p: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    bias2: Option<f64>,
    variance_sum: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    tau_b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    convenience: Option<Convenience<f64>>,
}

pub fn threshold(args: &ThresholdArgs) -> CliResult<()> {
    let clock = RunClock::start();
    let (model, _) = full_model(&args.model)?;
    let p = model.p();
    let out = match (&args.xi, args.tau_b) {
        (Some(path), _) => {
            let file: XiFile = read_json(path)?;
            check_schema(path, file.schema_version)?;
            let xi = to_vector(&file.xi);
            if xi.len() != p {
                return Err(CliError::Dimension(format!("xi has {} entries but V has {p} columns", xi.len())));
            }
            let r = domination_threshold(&model.v, &model.ve, &xi)?;
            ThresholdOutput {
                schema_version: SCHEMA_VERSION,
                regime: if r.always_dominated() { Regime::AlwaysDominated } else { Regime::Threshold },
                sigma2_threshold: r.sigma2_threshold,
                q: r.q,
                p: r.p,
                bias2: Some(r.bias2),
                variance_sum: r.variance_sum,
                tau_b: None,
                sigma2: None,
                convenience: None,
            }
        }
        (None, Some(tau_b)) => {
            let sigma2 = args.sigma2.ok_or_else(|| CliError::Invalid("--tau-b needs --sigma2".into()))?;
            if !(tau_b >= 0.0 && tau_b.is_finite()) {
                return Err(CliError::Invalid(format!("--tau-b must be finite and nonnegative, got {tau_b}")));
            }
            if !(sigma2 >= 0.0 && sigma2.is_finite()) {
                return Err(CliError::Invalid(format!("--sigma2 must be finite and nonnegative, got {sigma2}")));
            }
            let r = domination_threshold(&model.v, &model.ve, &vec![Complex64::new(0.0, 0.0); p])?;
            let always = r.always_dominated();
            ThresholdOutput {
                schema_version: SCHEMA_VERSION,
                regime: if always { Regime::AlwaysDominated } else { Regime::Threshold },
                sigma2_threshold: if always { 0.0 } else { tau_b / r.variance_sum },
                q: r.q,
                p: r.p,
                bias2: None,
                variance_sum: r.variance_sum,
                tau_b: Some(tau_b),
                sigma2: Some(sigma2),
                convenience: Some(convenience_from_report(&r, tau_b, sigma2)),
            }
        }
        (None, None) => return Err(CliError::Invalid("threshold needs --xi or --tau-b".into())),
    };
    if matches!(out.regime, Regime::AlwaysDominated) {
        log::info!("q = p: always dominated regime, no threshold applies");
    }
    ensure_dir(&args.out)?;
    write_json(&args.out.join(THRESHOLD_FILE), &out)?;
    let summary = json!({ "sigma2_threshold": out.sigma2_threshold, "q": out.q, "p": out.p, "regime": out.regime });
    clock.finish("threshold", json!(args), None, &args.out, &[THRESHOLD_FILE], summary)?;
    Ok(())
}

#[derive(Serialize)]
struct VeOutput {
    schema_version: u32,
    ve: Vec<Vec<Complex64>>,
}

#[derive(Serialize)]
struct Verification {
    schema_version: u32,
    requested_ratios: Vec<f64>,
    alphas: Vec<f64>,
    betas: Vec<f64>,
    ratios: Vec<f64>,
    q: usize,
    p: usize,
    max_ratio_error: f64,
}

pub fn design_basis(args: &DesignBasisArgs) -> CliResult<()> {
    let clock = RunClock::start();
    let m = load_model(&args.model)?;
    if !is_real(&m.v) {
        return Err(CliError::Invalid("design-basis needs a real V (all imaginary parts zero)".into()));
    }
    if m.ve.is_some() {
        log::warn!("ignoring `ve` in {}", args.model.display());
    }
    let file: RatiosFile = read_json(&args.ratios)?;
    check_schema(&args.ratios, file.schema_version)?;
    let v = m.v.map(|z| z.re);
    let ve = design_noise_basis(&v, &file.ratios)?;
    let f = gsvd(&v, &ve)?;
    let ratios = f.ratios();
    let max_ratio_error = ratios.iter().zip(&file.ratios).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let verification = Verification {
        schema_version: SCHEMA_VERSION,
        requested_ratios: file.ratios.clone(),
        alphas: f.alphas.clone(),
        betas: f.betas.clone(),
        ratios,
        q: f.q,
        p: f.p(),
        max_ratio_error,
    };
    ensure_dir(&args.out)?;
    let ve_c = ve.map(|x| Complex64::new(x, 0.0));
    write_json(&args.out.join(VE_FILE), &VeOutput { schema_version: SCHEMA_VERSION, ve: matrix_rows(&ve_c) })?;
    write_json(&args.out.join(VERIFICATION_FILE), &verification)?;
    let summary = json!({ "q": verification.q, "p": verification.p, "max_ratio_error": max_ratio_error });
    clock.finish("design-basis", json!(args), None, &args.out, &[VE_FILE, VERIFICATION_FILE], summary)?;
    Ok(())
}
