use std::io::Write;

use decay_erw::exact::{limit_mean_s, ExactError, MomentTable};
use decay_erw::montecarlo::{run_ensemble, EnsembleConfig, McError};
use decay_erw::regime::{classify, gamma_0, gamma_c, GrowthScale, RegimeLabel, Scaling};
use decay_erw::verify::{self, phase_grid, PHASE_SWEEP_EPS};
use log::{info, warn};
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::write_rows;
use crate::CliError;

const POINT_EPS: f64 = 1e-12;

impl From<McError> for CliError {
    fn from(e: McError) -> Self {
        match e {
            McError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

fn require_n(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.n == 0 {
        return Err(CliError::Usage("n must be at least 1".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct SimulateRow {
    seed: u64,
    n: u64,
    trials: u64,
    #[serde(rename = "mean_T")]
    mean_t: f64,
    #[serde(rename = "var_T")]
    var_t: f64,
    #[serde(rename = "mean_S")]
    mean_s: f64,
    #[serde(rename = "var_S")]
    var_s: f64,
    #[serde(rename = "se_mean_S")]
    se_mean_s: f64,
    mean_sign_changes: f64,
    var_sign_changes: f64,
}

/// Resolves the seed, drawing and logging a fresh one when none was given.
/// The drawn seed is written back so a saved config reproduces the run.
pub fn resolve_seed(cfg: &mut RunConfig) -> u64 {
    *cfg.seed.get_or_insert_with(|| {
        let seed = rand::random();
        warn!("no seed given; using seed {seed}");
        seed
    })
}

pub fn simulate(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let params = cfg.params()?;
    require_n(cfg)?;
    let seed = cfg.seed.expect("seed resolved before simulate");
    let checkpoints = cfg.checkpoints.resolve(cfg.n)?;
    let ens = EnsembleConfig::new(params, cfg.n, cfg.trials, seed).with_checkpoints(&checkpoints);
    let result = run_ensemble(&ens)?;
    let rows: Vec<SimulateRow> = result
        .checkpoints
        .iter()
        .map(|c| SimulateRow {
            seed,
            n: c.n,
            trials: c.s.count,
            mean_t: c.t.mean,
            var_t: c.t.variance(),
            mean_s: c.s.mean,
            var_s: c.s.variance(),
            se_mean_s: c.s.std_error(),
            mean_sign_changes: c.sign_changes.mean,
            var_sign_changes: c.sign_changes.variance(),
        })
        .collect();
    write_rows(cfg.format, "simulate", &rows, out)
}

#[derive(Serialize)]
struct MomentsRow {
    n: u64,
    #[serde(rename = "mean_T")]
    mean_t: f64,
    #[serde(rename = "second_moment_T")]
    m2_t: f64,
    #[serde(rename = "var_T")]
    var_t: f64,
    #[serde(rename = "mean_S")]
    mean_s: f64,
    #[serde(rename = "second_moment_S")]
    m2_s: f64,
    #[serde(rename = "var_S")]
    var_s: f64,
    #[serde(rename = "limit_mean_S")]
    limit_mean_s: Option<f64>,
    #[serde(rename = "limit_mean_S_error_bound")]
    limit_error_bound: Option<f64>,
}

pub fn moments(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let params = cfg.params()?;
    require_n(cfg)?;
    let checkpoints = cfg.checkpoints.resolve(cfg.n)?;
    let limit = match limit_mean_s(&params, cfg.tol) {
        Ok(l) => Some(l),
        Err(e @ ExactError::NotConvergentRegime { .. }) if cfg.limit => {
            return Err(CliError::Usage(e.to_string()))
        }
        Err(ExactError::NotConvergentRegime { .. }) => None,
        Err(e) if cfg.limit => return Err(CliError::Runtime(e.to_string())),
        Err(e) => {
            warn!("limit of E[S_n] omitted: {e}");
            None
        }
    };
    let table = MomentTable::compute(&params, &checkpoints);
    let rows: Vec<MomentsRow> = table
        .rows
        .iter()
        .map(|r| MomentsRow {
            n: r.n,
            mean_t: r.mean_t,
            m2_t: r.m2_t,
            var_t: r.var_t(),
            mean_s: r.mean_s,
            m2_s: r.m2_s,
            var_s: r.var_s(),
            limit_mean_s: limit.map(|l| l.value),
            limit_error_bound: limit.map(|l| l.tail_bound),
        })
        .collect();
    write_rows(cfg.format, "moments", &rows, out)
}

#[derive(Serialize)]
struct PhaseRow {
    alpha: f64,
    gamma: f64,
    regime: &'static str,
    gamma_c: f64,
    gamma_0: Option<f64>,
    scaling: Option<&'static str>,
    scale: Option<String>,
    variance: Option<f64>,
    drift_coefficient: Option<f64>,
}

/// `n^a (log n)^b …`, omitting unit factors.
pub fn format_scale(s: &GrowthScale) -> String {
    let parts: Vec<String> = [
        ("n", s.n_exponent),
        ("(log n)", s.log_exponent),
        ("(log log n)", s.loglog_exponent),
        ("(log log log n)", s.logloglog_exponent),
    ]
    .iter()
    .filter(|(_, e)| *e != 0.0)
    .map(|(base, e)| format!("{base}^{e}"))
    .collect();
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join(" ")
    }
}

fn phase_row(alpha: f64, gamma: f64, label: RegimeLabel) -> PhaseRow {
    let (scaling, variance, coefficient) = match label.scaling {
        None => (None, None, None),
        Some(Scaling::Envelope { .. }) => (Some("envelope"), None, None),
        Some(Scaling::Gaussian { variance, .. }) => (Some("gaussian"), Some(variance), None),
        Some(Scaling::RandomDrift { coefficient, .. }) => (Some("random_drift"), None, Some(coefficient)),
    };
    PhaseRow {
        alpha,
        gamma,
        regime: label.kind.name(),
        gamma_c: gamma_c(alpha),
        gamma_0: (alpha < 0.5).then(|| gamma_0(alpha)),
        scaling,
        scale: label.scaling.map(|s| format_scale(&s.scale())),
        variance,
        drift_coefficient: coefficient,
    }
}

pub fn phase(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    if let Some(eps) = cfg.eps {
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(CliError::Usage(format!("eps must be finite and non-negative, got {eps}")));
        }
    }
    let rows: Vec<PhaseRow> = if cfg.sweep {
        let eps = cfg.eps.unwrap_or(PHASE_SWEEP_EPS);
        let rows: Vec<PhaseRow> = phase_grid().map(|(a, g)| phase_row(a, g, classify(a, g, eps))).collect();
        for (name, count) in verify::phase_counts(eps) {
            info!("{name}: {count}");
        }
        rows
    } else {
        let params = cfg.params()?;
        let (a, g) = (params.alpha(), params.gamma());
        vec![phase_row(a, g, classify(a, g, cfg.eps.unwrap_or(POINT_EPS)))]
    };
    write_rows(cfg.format, "phase", &rows, out)
}

/// Writes the JSON report and fails when any criterion fails.
pub fn verify(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let ids = if cfg.quick { verify::QUICK } else { verify::ALL };
    let mut criteria = Vec::with_capacity(ids.len());
    for &id in ids {
        let Some(report) = verify::run_criterion(id) else { continue };
        info!(
            "criterion {id}: {} ({:.1}s) {}",
            if report.passed { "pass" } else { "FAIL" },
            report.elapsed_secs,
            report.detail
        );
        criteria.push(report);
    }
    let report = verify::SuiteReport {
        passed: criteria.iter().all(|c| c.passed),
        criteria,
    };
    let write_err = |e: &dyn std::fmt::Display| CliError::Runtime(format!("write failed: {e}"));
    serde_json::to_writer_pretty(&mut *out, &report).map_err(|e| write_err(&e))?;
    out.write_all(b"\n").map_err(|e| write_err(&e))?;
    out.flush().map_err(|e| write_err(&e))?;
    if report.passed {
        Ok(())
    } else {
        Err(CliError::VerificationFailed(report.failed_ids()))
    }
}
