//! Regime experiments built on [`run_ensemble`](super::run_ensemble).

use serde::{Deserialize, Serialize};

use super::{median, pearson, run_ensemble, EnsembleConfig, EnsembleStats, McError, Observables};
use crate::exact::MomentTable;
use crate::model::ModelParams;
use crate::regime::{classify, Scaling, DEFAULT_EPS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ScalingSource {
    Exact,
    MonteCarlo { trials: u64, seed: u64 },
}

/// Least-squares line through `(ln n, ln Var(S_n))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root mean square of the fit residuals in log space.
    pub residual: f64,
    pub points: Vec<(u64, f64)>,
}

/// Fits the growth exponent of `Var(S_n)` over `checkpoints`.
///
/// Only meaningful where `Var(S_n)` grows polynomially (`γ < ½`).
pub fn variance_scaling_fit(
    params: &ModelParams,
    checkpoints: &[u64],
    source: ScalingSource,
) -> Result<ScalingFit, McError> {
    let points: Vec<(u64, f64)> = match source {
        ScalingSource::Exact => MomentTable::compute(params, checkpoints)
            .rows
            .iter()
            .map(|r| (r.n, r.var_s()))
            .collect(),
        ScalingSource::MonteCarlo { trials, seed } => {
            let n_max = checkpoints.iter().copied().max().unwrap_or(0);
            let cfg = EnsembleConfig::new(*params, n_max, trials, seed).with_checkpoints(checkpoints);
            run_ensemble(&cfg)?
                .checkpoints
                .iter()
                .map(|c| (c.n, c.s.variance()))
                .collect()
        }
    };
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(_, v)| v > 0.0)
        .map(|&(n, v)| ((n as f64).ln(), v.ln()))
        .collect();
    if logs.len() < 2 || logs.iter().all(|p| p.0 == logs[0].0) {
        return Err(McError::InvalidConfig(
            "need at least two distinct checkpoints with positive variance".into(),
        ));
    }
    let (slope, intercept) = least_squares(&logs);
    let residual = (logs
        .iter()
        .map(|&(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / logs.len() as f64)
        .sqrt();
    Ok(ScalingFit {
        slope,
        intercept,
        residual,
        points,
    })
}

fn least_squares(xy: &[(f64, f64)]) -> (f64, f64) {
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = xy.iter().map(|&(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xy.iter().map(|&(x, _)| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

fn require_superdiffusive_drift(params: &ModelParams) -> Result<(), McError> {
    let (a, g) = (params.alpha(), params.gamma());
    if a > 0.5 && g < a {
        Ok(())
    } else {
        Err(McError::InvalidConfig(format!(
            "drift experiments need alpha > 1/2 and gamma < alpha (got {a}, {g})"
        )))
    }
}

/// Pairing of `S_n / n^(α−γ)` with `(α/(α−γ)) T_n / n^α` across trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftCoupling {
    /// `None` when either statistic is constant across trials.
    pub correlation: Option<f64>,
    pub degenerate: bool,
    /// Ratio of the two sample means.
    pub mean_ratio: f64,
    pub scaled_s: EnsembleStats,
    pub scaled_drift: EnsembleStats,
}

pub fn drift_coupling(
    params: &ModelParams,
    n_probe: u64,
    trials: u64,
    seed: u64,
) -> Result<DriftCoupling, McError> {
    require_superdiffusive_drift(params)?;
    let (a, g) = (params.alpha(), params.gamma());
    let cfg = EnsembleConfig::new(*params, n_probe, trials, seed).with_observables(Observables {
        decomposition: false,
        per_trial: true,
    });
    let res = run_ensemble(&cfg)?;
    let n = n_probe as f64;
    let (xs, ys): (Vec<f64>, Vec<f64>) = res
        .trials
        .unwrap()
        .iter()
        .map(|rec| {
            let snap = rec.snapshots[0];
            (
                snap.s / n.powf(a - g),
                a / (a - g) * snap.t as f64 / n.powf(a),
            )
        })
        .unzip();
    let correlation = pearson(&xs, &ys);
    let scaled_s = EnsembleStats::from_slice(&xs);
    let scaled_drift = EnsembleStats::from_slice(&ys);
    Ok(DriftCoupling {
        correlation,
        degenerate: correlation.is_none(),
        mean_ratio: scaled_s.mean / scaled_drift.mean,
        scaled_s,
        scaled_drift,
    })
}

/// Pathwise size of `D_k = S_k − (α L̂/(α−γ)) k^(α−γ)` with `L̂ = T_n / n^α`
/// taken at the horizon `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftResidual {
    pub checkpoints: Vec<u64>,
    /// Per checkpoint, `|D_k|` across trials.
    pub abs_residual: Vec<EnsembleStats>,
    /// Per trial `max_k |D_k|` over the checkpoints.
    pub path_sup: EnsembleStats,
    /// `|α L̂/(α−γ)| n^(α−γ)` across trials, for comparison.
    pub drift_size: EnsembleStats,
}

pub fn drift_residual(
    params: &ModelParams,
    checkpoints: &[u64],
    trials: u64,
    seed: u64,
) -> Result<DriftResidual, McError> {
    require_superdiffusive_drift(params)?;
    let (a, g) = (params.alpha(), params.gamma());
    let n_max = checkpoints.iter().copied().max().unwrap_or(0);
    let cfg = EnsembleConfig::new(*params, n_max, trials, seed)
        .with_checkpoints(checkpoints)
        .with_observables(Observables {
            decomposition: false,
            per_trial: true,
        });
    let res = run_ensemble(&cfg)?;
    let mut abs_residual = vec![EnsembleStats::new(); checkpoints.len()];
    let mut path_sup = EnsembleStats::new();
    let mut drift_size = EnsembleStats::new();
    for rec in res.trials.unwrap() {
        let last = rec.snapshots.last().unwrap();
        let l_hat = last.t as f64 / (n_max as f64).powf(a);
        let coef = a * l_hat / (a - g);
        drift_size.push((coef * (n_max as f64).powf(a - g)).abs());
        let mut sup = 0.0f64;
        for (acc, snap) in abs_residual.iter_mut().zip(&rec.snapshots) {
            let d = (snap.s - coef * (snap.n as f64).powf(a - g)).abs();
            acc.push(d);
            sup = sup.max(d);
        }
        path_sup.push(sup);
    }
    Ok(DriftResidual {
        checkpoints: res.config.checkpoints,
        abs_residual,
        path_sup,
        drift_size,
    })
}

/// Sign changes of `S` counted at several horizons along the same paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillationCensus {
    pub horizons: Vec<u64>,
    /// `counts[h][i]`: changes of trial `i` up to `horizons[h]`.
    pub counts: Vec<Vec<u64>>,
    pub medians: Vec<f64>,
    pub quiet_after: u64,
    /// Fraction of trials with no change in `(quiet_after, n_max]`.
    pub quiet_fraction: f64,
    /// Fraction of trials whose count is equal at the last two horizons.
    pub stable_fraction: f64,
}

pub fn oscillation_census(
    params: &ModelParams,
    horizons: &[u64],
    trials: u64,
    seed: u64,
    quiet_after: u64,
) -> Result<OscillationCensus, McError> {
    let n_max = horizons.iter().copied().max().unwrap_or(0);
    let cfg = EnsembleConfig::new(*params, n_max, trials, seed)
        .with_checkpoints(horizons)
        .with_observables(Observables {
            decomposition: false,
            per_trial: true,
        });
    let res = run_ensemble(&cfg)?;
    let records = res.trials.unwrap();
    let counts: Vec<Vec<u64>> = (0..horizons.len())
        .map(|h| records.iter().map(|r| r.snapshots[h].sign_changes).collect())
        .collect();
    let medians = counts
        .iter()
        .map(|c| median(&c.iter().map(|&x| x as f64).collect::<Vec<_>>()))
        .collect();
    let frac = |pred: &dyn Fn(usize) -> bool| {
        (0..records.len()).filter(|&i| pred(i)).count() as f64 / records.len() as f64
    };
    let quiet_fraction = frac(&|i| records[i].snapshots.last().unwrap().last_sign_change <= quiet_after);
    let stable_fraction = if horizons.len() < 2 {
        1.0
    } else {
        let (a, b) = (&counts[horizons.len() - 2], &counts[horizons.len() - 1]);
        frac(&|i| a[i] == b[i])
    };
    Ok(OscillationCensus {
        horizons: res.config.checkpoints,
        counts,
        medians,
        quiet_after,
        quiet_fraction,
        stable_fraction,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Statistic {
    T,
    S,
}

/// Sample moments of a statistic divided by its CLT scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CltMoments {
    pub scale: f64,
    /// Variance of the limiting normal law.
    pub expected_variance: f64,
    pub mean: f64,
    pub variance: f64,
    pub variance_std_error: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

/// CLT scale and limiting variance for `statistic` at time `n`.
pub fn clt_normalisation(params: &ModelParams, n: u64, statistic: Statistic) -> Result<(f64, f64), McError> {
    let (a, g) = (params.alpha(), params.gamma());
    let nf = n as f64;
    let none = || McError::NoCentralLimit { alpha: a, gamma: g };
    match statistic {
        Statistic::T if a < 0.5 => Ok((nf.sqrt(), 1.0 / (1.0 - 2.0 * a))),
        Statistic::T if a == 0.5 => Ok(((nf * nf.ln()).sqrt(), 1.0)),
        Statistic::T => Err(none()),
        Statistic::S => match classify(a, g, DEFAULT_EPS).scaling {
            Some(Scaling::Gaussian {
                scale, variance, ..
            }) => Ok((scale.eval(nf), variance)),
            _ => Err(none()),
        },
    }
}

pub fn clt_moments(
    params: &ModelParams,
    n: u64,
    trials: u64,
    statistic: Statistic,
    seed: u64,
) -> Result<CltMoments, McError> {
    let (scale, expected_variance) = clt_normalisation(params, n, statistic)?;
    let res = run_ensemble(&EnsembleConfig::new(*params, n, trials, seed))?;
    let raw = match statistic {
        Statistic::T => res.last().t,
        Statistic::S => res.last().s,
    };
    let z = scale_stats(&raw, scale);
    Ok(CltMoments {
        scale,
        expected_variance,
        mean: z.mean,
        variance: z.variance(),
        variance_std_error: z.variance_std_error(),
        skewness: z.skewness(),
        excess_kurtosis: z.excess_kurtosis(),
    })
}

/// Statistics of `x / c` from those of `x`.
fn scale_stats(s: &EnsembleStats, c: f64) -> EnsembleStats {
    EnsembleStats {
        count: s.count,
        mean: s.mean / c,
        m2: s.m2 / c.powi(2),
        m3: s.m3 / c.powi(3),
        m4: s.m4 / c.powi(4),
        min: s.min / c,
        max: s.max / c,
    }
}
