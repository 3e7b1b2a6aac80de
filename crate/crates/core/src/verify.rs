//! Verification suite: every check compares the library against an independent
//! route (enumeration, a closed form, or an exact moment) at a fixed tolerance.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::exact::{
    asymptotic_m2_t, exact_t_distribution, gamma_factors, limit_mean_s, mean_s, mean_t,
    second_moment_s, second_moment_t, MomentTable,
};
use crate::model::{enumerate_paths, Checkpoints, ModelParams};
use crate::montecarlo::{
    clt_moments, drift_coupling, oscillation_census, run_ensemble, variance_scaling_fit,
    EnsembleConfig, Observables, ScalingSource, Statistic,
};
use crate::regime::{
    classify, excluded_superdiffusive_gamma, gamma_0, gamma_0_quadratic_root, RegimeKind,
};

/// Criteria run by `--quick`: the deterministic ones.
pub const QUICK: &[u32] = &[1, 2, 3, 5, 10, 12];
pub const ALL: &[u32] = &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12];

pub const ALPHA_GRID: [f64; 7] = [-1.0, -0.5, 0.0, 0.4, 0.5, 0.75, 1.0];
const BETA_GRID: [f64; 3] = [-0.5, 0.0, 1.0];
const GAMMA_GRID: [f64; 4] = [0.25, 0.5, 1.0, 1.7];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub id: u32,
    pub title: String,
    pub passed: bool,
    pub detail: String,
    pub elapsed_secs: f64,
    /// Set on a failure where the exact, noise-free value of the statistic at
    /// the prescribed `n` already lies outside the tolerance and the sample
    /// agrees with it; no implementation of the model could pass.
    pub exact_value_outside_tolerance: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub passed: bool,
    pub criteria: Vec<CriterionReport>,
}

impl SuiteReport {
    pub fn failed_ids(&self) -> Vec<u32> {
        self.criteria.iter().filter(|c| !c.passed).map(|c| c.id).collect()
    }
}

/// Exact-moment routines under test; swapped out to check that a broken
/// implementation is caught.
#[derive(Clone, Copy)]
pub struct MomentFns {
    pub mean_t: fn(&ModelParams, u64) -> f64,
    pub second_moment_t: fn(&ModelParams, u64) -> f64,
    pub mean_s: fn(&ModelParams, u64) -> f64,
    pub second_moment_s: fn(&ModelParams, u64) -> f64,
}

impl Default for MomentFns {
    fn default() -> Self {
        Self {
            mean_t,
            second_moment_t,
            mean_s,
            second_moment_s,
        }
    }
}

pub fn run_suite(ids: &[u32]) -> SuiteReport {
    let criteria: Vec<_> = ids.iter().filter_map(|&id| run_criterion(id)).collect();
    SuiteReport {
        passed: criteria.iter().all(|c| c.passed),
        criteria,
    }
}

pub fn run_criterion(id: u32) -> Option<CriterionReport> {
    let start = Instant::now();
    let (title, outcome): (_, Outcome) = match id {
        1 => (
            "exact moments match path enumeration",
            enumeration_oracle(MomentFns::default()).into(),
        ),
        2 => ("law of T_n has mean beta a_n", t_distribution_mean().into()),
        3 => ("E[T_n^2] asymptotics at n = 1e6", second_moment_asymptotics().into()),
        4 => ("CLT of T_n / sqrt(n)", clt_of_t().into()),
        5 => ("Var(S_n) growth exponent 1 - 2 gamma", variance_exponent().into()),
        6 => ("CLT of S_n at alpha = 1/2", clt_of_s_critical_memory()),
        7 => ("superdiffusive drift coupling", drift_correlation().into()),
        8 => ("remainder bound along paths", remainder_bound_paths().into()),
        9 => ("limit of E[S_n] against Monte Carlo", limit_mean_vs_mc().into()),
        10 => ("phase diagram partition", phase_diagram().into()),
        11 => ("oscillation census", oscillation().into()),
        12 => ("regime curve identities", curve_identities().into()),
        _ => return None,
    };
    let elapsed_secs = start.elapsed().as_secs_f64();
    let passed = outcome.passed && within_runtime(id, elapsed_secs);
    Some(CriterionReport {
        id,
        title: title.to_string(),
        passed,
        detail: outcome.detail,
        elapsed_secs,
        exact_value_outside_tolerance: !passed && outcome.exact_value_outside_tolerance,
    })
}

fn within_runtime(id: u32, secs: f64) -> bool {
    match id {
        1 => secs < 60.0,
        3 => secs < 10.0,
        _ => true,
    }
}

fn params(a: f64, b: f64, g: f64) -> ModelParams {
    ModelParams::new(a, b, g).expect("suite parameters are valid")
}

fn param_grid() -> impl Iterator<Item = ModelParams> {
    ALPHA_GRID.into_iter().flat_map(|a| {
        BETA_GRID
            .into_iter()
            .flat_map(move |b| GAMMA_GRID.into_iter().map(move |g| params(a, b, g)))
    })
}

struct Outcome {
    passed: bool,
    detail: String,
    exact_value_outside_tolerance: bool,
}

impl From<(bool, String)> for Outcome {
    fn from((passed, detail): (bool, String)) -> Self {
        Self {
            passed,
            detail,
            exact_value_outside_tolerance: false,
        }
    }
}

/// Criterion 1, with the moment routines injectable.
pub fn enumeration_oracle(fns: MomentFns) -> (bool, String) {
    const N: u32 = 14;
    let mut worst = 0.0f64;
    let mut worst_at = String::new();
    for p in param_grid() {
        for n in 1..=N {
            let dist = enumerate_paths(&p, n).expect("within enumeration cap");
            let pairs = [
                ("E[T]", dist.expect(|e| e.t as f64), (fns.mean_t)(&p, n as u64)),
                ("E[T^2]", dist.expect(|e| (e.t * e.t) as f64), (fns.second_moment_t)(&p, n as u64)),
                ("E[S]", dist.expect(|e| e.s), (fns.mean_s)(&p, n as u64)),
                ("E[S^2]", dist.expect(|e| e.s * e.s), (fns.second_moment_s)(&p, n as u64)),
            ];
            for (name, brute, exact) in pairs {
                let err = (brute - exact).abs();
                if err.is_nan() || err > worst {
                    worst = err;
                    worst_at = format!("{name} at {p:?}, n = {n}");
                }
            }
        }
    }
    (
        worst <= 1e-10,
        format!("84 triples, n <= {N}: max abs error {worst:.2e} ({worst_at})"),
    )
}

fn t_distribution_mean() -> (bool, String) {
    const N: u64 = 200;
    let mut worst = 0.0f64;
    for a in ALPHA_GRID {
        let factors = gamma_factors(a, N as usize);
        for b in BETA_GRID {
            let p = params(a, b, 1.0);
            for n in 1..=N {
                let err = (exact_t_distribution(&p, n).mean() - b * factors.get(n as usize)).abs();
                worst = worst.max(err);
            }
        }
    }
    (worst <= 1e-12, format!("n <= {N}: max abs error {worst:.2e}"))
}

fn second_moment_asymptotics() -> (bool, String) {
    const N: u64 = 1_000_000;
    let mut ok = true;
    let mut parts = Vec::new();
    for (a, tol) in [(0.0, 0.02), (0.2, 0.02), (0.75, 0.02), (0.5, 0.05)] {
        let ratio = second_moment_t(&params(a, 0.0, 1.0), N) / asymptotic_m2_t(a, N);
        ok &= (ratio - 1.0).abs() <= tol;
        parts.push(format!("alpha {a}: ratio {ratio:.5} (tol {tol})"));
    }
    (ok, parts.join("; "))
}

fn clt_of_t() -> (bool, String) {
    let p = params(0.2, 0.0, 0.5);
    let m = clt_moments(&p, 10_000, 100_000, Statistic::T, 0x5eed_0004).expect("valid run");
    let rel = m.variance / m.expected_variance - 1.0;
    let ok = rel.abs() <= 0.05 && m.skewness.abs() < 0.05 && m.excess_kurtosis.abs() < 0.1;
    (
        ok,
        format!(
            "var {:.4} vs {:.4} ({:+.2}%), skew {:+.4}, ex. kurt {:+.4}",
            m.variance,
            m.expected_variance,
            100.0 * rel,
            m.skewness,
            m.excess_kurtosis
        ),
    )
}

fn variance_exponent() -> (bool, String) {
    let cps = Checkpoints::geometric(16, 1_000, 1_000_000).expect("valid spec");
    let mut ok = true;
    let mut parts = Vec::new();
    for (a, g) in [(0.0, 0.25), (0.3, 0.25), (-0.5, 0.3)] {
        let fit = variance_scaling_fit(&params(a, 0.0, g), cps.as_slice(), ScalingSource::Exact)
            .expect("positive variances");
        let target = 1.0 - 2.0 * g;
        ok &= (fit.slope - target).abs() <= 0.05;
        parts.push(format!("({a}, {g}): slope {:.4} vs {target}", fit.slope));
    }
    (ok, parts.join("; "))
}

/// Passes when both the sample and the exact standardized variance are within
/// 20% of the limit.
fn clt_of_s_critical_memory() -> Outcome {
    const N: u64 = 1_000_000;
    let p = params(0.5, 0.0, 0.25);
    let m = clt_moments(&p, N, 10_000, Statistic::S, 0x5eed_0006).expect("valid run");
    let rel = m.variance / m.expected_variance - 1.0;
    let exact = MomentTable::compute(&p, &[N]).rows[0].var_s() / m.scale.powi(2);
    let exact_rel = exact / m.expected_variance - 1.0;
    let sample_matches_exact = (m.variance - exact).abs() <= 4.0 * m.variance_std_error;
    Outcome {
        passed: rel.abs() <= 0.2 && exact_rel.abs() <= 0.2,
        detail: format!(
            "var {:.4} ± {:.4} vs {} ({:+.2}%); exact standardized variance at this n {:.4} ({:+.2}%)",
            m.variance,
            m.variance_std_error,
            m.expected_variance,
            100.0 * rel,
            exact,
            100.0 * exact_rel
        ),
        exact_value_outside_tolerance: exact_rel.abs() > 0.2 && sample_matches_exact,
    }
}

fn drift_correlation() -> (bool, String) {
    let c = drift_coupling(&params(0.8, 0.0, 0.3), 100_000, 1_000, 0x5eed_0007).expect("valid run");
    let r = c.correlation.unwrap_or(f64::NAN);
    (r > 0.99, format!("correlation {r:.6}, mean ratio {:.4}", c.mean_ratio))
}

pub const REMAINDER_TRIPLES: [(f64, f64, f64); 5] = [
    (0.8, 0.0, 0.3),
    (0.3, 0.5, 0.6),
    (-0.7, 1.0, 0.4),
    (1.0, -1.0, 0.5),
    (0.5, 0.2, 1.2),
];

fn remainder_bound_paths() -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, (a, b, g)) in REMAINDER_TRIPLES.into_iter().enumerate() {
        let cfg = EnsembleConfig::new(params(a, b, g), 100_000, 1_000, 0x5eed_0800 + i as u64)
            .with_observables(Observables {
                decomposition: true,
                per_trial: false,
            });
        let d = run_ensemble(&cfg).expect("valid run").last().decomp.expect("requested");
        ok &= d.violations == 0 && d.max_resid22_gap <= 1e-9;
        parts.push(format!(
            "({a}, {b}, {g}): max|R| {:.4} <= {:.4}, violations {}, resid gap {:.1e}",
            d.max_abs_r, d.bound, d.violations, d.max_resid22_gap
        ));
    }
    (ok, parts.join("; "))
}

fn limit_mean_vs_mc() -> (bool, String) {
    const N: u64 = 100_000;
    let p = params(0.25, 1.0, 1.0);
    let limit = limit_mean_s(&p, 1e-10).expect("convergent regime");
    let res = run_ensemble(&EnsembleConfig::new(p, N, 10_000, 0x5eed_0009)).expect("valid run");
    let s = res.last().s;
    let z = (s.mean - limit.value) / s.std_error();
    (
        z.abs() <= 3.0,
        format!(
            "limit {:.6} (±{:.1e}), E[S_n] exact {:.6}, MC {:.6} ± {:.6}, z = {z:+.2}",
            limit.value,
            limit.tail_bound,
            mean_s(&p, N),
            s.mean,
            s.std_error()
        ),
    )
}

/// Grid points of the phase sweep: `α_i = −1 + i/50`, `γ_j = 1.5 j/101`.
pub fn phase_grid() -> impl Iterator<Item = (f64, f64)> {
    (0..101).flat_map(|i| (1..=101).map(move |j| (-1.0 + i as f64 / 50.0, 1.5 * j as f64 / 101.0)))
}

/// Curve tolerance of the sweep: half the γ spacing, so each curve occupies
/// one row of cells.
pub const PHASE_SWEEP_EPS: f64 = 0.75 / 101.0;

/// Region by inequalities and sign changes of the defining quadratics.
fn phase_oracle(a: f64, g: f64, eps: f64) -> &'static str {
    let near = |c: f64| (g - c).abs() <= eps;
    let brackets = |f: &dyn Fn(f64) -> f64| f(g - eps) * f(g + eps) <= 0.0;
    if near(0.5) && a <= 0.5 || near(a) && a >= 0.5 {
        return "critical_line";
    }
    if g > 0.5 && g > a {
        return "convergent";
    }
    let q0 = |x: f64| (1.0 - 2.0 * a) * x * x + 2.0 * a * a * x - a * a;
    let q1 = |x: f64| (2.0 * a - 1.0) * x * x + 2.0 * a * a * x - a * a;
    if a < 0.5 && g - eps > 0.0 && brackets(&q0) {
        return "gamma_0";
    }
    if a > 0.5 && g < 0.5 && brackets(&q1) {
        return "superdiffusive_fluctuation";
    }
    if a <= 0.5 {
        "oscillatory"
    } else {
        "diverges_monotone"
    }
}


pub fn phase_counts(eps: f64) -> Vec<(&'static str, usize)> {
    let mut counts: Vec<(&'static str, usize)> = Vec::new();
    for (a, g) in phase_grid() {
        let name = match classify(a, g, eps).kind {
            RegimeKind::OnExcludedCurve(_) => "on_excluded_curve",
            other => other.name(),
        };
        match counts.iter_mut().find(|c| c.0 == name) {
            Some(c) => c.1 += 1,
            None => counts.push((name, 1)),
        }
    }
    counts.sort();
    counts
}

fn phase_diagram() -> (bool, String) {
    let mut mismatches = 0;
    for (a, g) in phase_grid() {
        if classify(a, g, PHASE_SWEEP_EPS).kind.name() != phase_oracle(a, g, PHASE_SWEEP_EPS) {
            mismatches += 1;
        }
    }
    let counts = phase_counts(PHASE_SWEEP_EPS);
    let stable = counts == phase_counts(PHASE_SWEEP_EPS);
    let spots = [
        (0.0, 0.3, RegimeKind::Oscillatory),
        (0.8, 0.5, RegimeKind::DivergesMonotone),
        (0.8, 0.9, RegimeKind::Convergent),
        (0.0, 0.6, RegimeKind::Convergent),
    ];
    let spots_ok = spots
        .iter()
        .all(|&(a, g, k)| classify(a, g, crate::regime::DEFAULT_EPS).kind == k);
    (
        mismatches == 0 && stable && spots_ok && counts.len() == 5,
        format!("101x101 grid, eps {PHASE_SWEEP_EPS:.5}: {mismatches} mismatches, counts {counts:?}, spot values ok: {spots_ok}"),
    )
}

fn oscillation() -> (bool, String) {
    let osc = oscillation_census(&params(0.0, 0.0, 0.25), &[10_000, 100_000], 1_000, 0x5eed_0b01, 1_000)
        .expect("valid run");
    let div = oscillation_census(&params(0.8, 0.0, 0.5), &[1_000, 100_000], 1_000, 0x5eed_0b02, 1_000)
        .expect("valid run");
    let grows = osc.medians[1] > osc.medians[0];
    (
        grows && div.quiet_fraction >= 0.95,
        format!(
            "oscillatory medians {} -> {}; divergent: {:.1}% without changes after 1e3",
            osc.medians[0],
            osc.medians[1],
            100.0 * div.quiet_fraction
        ),
    )
}

fn curve_identities() -> (bool, String) {
    let gamma0_gap = (0..=300)
        .map(|i| -1.0 + 1.49 * i as f64 / 300.0)
        .map(|a| (gamma_0(a) - gamma_0_quadratic_root(a)).abs())
        .fold(0.0, f64::max);
    let curve_gap = [0.6, 0.75, 0.9, 1.0]
        .into_iter()
        .map(|a: f64| {
            let g = excluded_superdiffusive_gamma(a);
            (g * (2.0 * a - 1.0).sqrt() - a * (1.0 - 2.0 * g).sqrt()).abs()
        })
        .fold(0.0, f64::max);
    (
        gamma0_gap <= 1e-12 && curve_gap <= 1e-12,
        format!("gamma_0 forms differ by {gamma0_gap:.1e}; superdiffusive curve residual {curve_gap:.1e}"),
    )
}
