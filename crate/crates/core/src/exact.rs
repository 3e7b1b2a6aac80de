//! Exact moments and laws.
//!
//! Everything here follows from the conditional mean `E[X_{k+1} | F_k] = α T_k / k`.
//! Propagating it gives joint recursions for `E[T_n²]`, `E[S_n T_n]` and
//! `E[S_n²]` that need no division by the factors `a_n`, so they remain valid at
//! `α = −1` where `a_n` vanishes for `n ≥ 2`.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;
use thiserror::Error;

use crate::model::ModelParams;
use crate::regime::gamma_c;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExactError {
    #[error("index condition 1 <= {k} <= {m} violated")]
    BadIndices { k: u64, m: u64 },
    #[error("factor a_{k} vanishes; ratio-based formula is undefined")]
    DegenerateFactors { k: u64 },
    #[error("gamma = {gamma} does not exceed the critical value {critical}; E[S_inf] is not defined")]
    NotConvergentRegime { gamma: f64, critical: f64 },
    #[error("tail bound {tail_bound:e} still above tolerance after {terms} terms")]
    ToleranceNotReached { value: f64, tail_bound: f64, terms: u64 },
}

/// The factors `a_k = ∏_{j=1}^{k−1} (1 + α/j)` for `k = 1..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaFactors {
    alpha: f64,
    a: Vec<f64>,
}

impl GammaFactors {
    /// `a_k`; `a_0 = 1` by convention.
    pub fn get(&self, k: usize) -> f64 {
        if k == 0 {
            1.0
        } else {
            self.a[k - 1]
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.a
    }
}

pub fn gamma_factors(alpha: f64, n: usize) -> GammaFactors {
    let mut a = Vec::with_capacity(n);
    let mut cur = 1.0;
    for k in 1..=n {
        if k > 1 {
            cur *= 1.0 + alpha / (k - 1) as f64;
        }
        a.push(cur);
    }
    GammaFactors { alpha, a }
}

/// `∏_{j=from}^{to−1} (1 + α/j)`, equal to `a_to / a_from` whenever that ratio exists.
fn factor_ratio(alpha: f64, from: u64, to: u64) -> f64 {
    (from..to).map(|j| 1.0 + alpha / j as f64).product()
}

/// Exact moments at step `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub n: u64,
    pub mean_t: f64,
    pub m2_t: f64,
    pub mean_s: f64,
    pub m2_s: f64,
    /// `E[S_n T_n]`.
    pub cross_st: f64,
}

impl MomentRow {
    pub fn var_t(&self) -> f64 {
        self.m2_t - self.mean_t * self.mean_t
    }

    pub fn var_s(&self) -> f64 {
        self.m2_s - self.mean_s * self.mean_s
    }
}

/// Streams [`MomentRow`]s for `n = 1, 2, …` in O(1) per step.
#[derive(Debug, Clone)]
pub struct MomentRecursion {
    params: ModelParams,
    n: u64,
    a: f64,
    m2_t: f64,
    mean_s: f64,
    m2_s: f64,
    cross_st: f64,
}

impl MomentRecursion {
    pub fn new(params: ModelParams) -> Self {
        Self {
            params,
            n: 0,
            a: 1.0,
            m2_t: 0.0,
            mean_s: 0.0,
            m2_s: 0.0,
            cross_st: 0.0,
        }
    }

    /// Row at the current `n` (all zeros at `n = 0`).
    pub fn row(&self) -> MomentRow {
        MomentRow {
            n: self.n,
            mean_t: if self.n == 0 { 0.0 } else { self.params.beta() * self.a },
            m2_t: self.m2_t,
            mean_s: self.mean_s,
            m2_s: self.m2_s,
            cross_st: self.cross_st,
        }
    }

    /// `E[X_{n+1}²]` minus the predictable part: `E[(X_{n+1} − E[X_{n+1}|F_n])²]`.
    pub fn next_innovation_variance(&self) -> f64 {
        if self.n == 0 {
            let b = self.params.beta();
            1.0 - b * b
        } else {
            let alpha = self.params.alpha();
            let n = self.n as f64;
            1.0 - alpha * alpha * self.m2_t / (n * n)
        }
    }

    pub fn step(&mut self) {
        let alpha = self.params.alpha();
        let k = self.n + 1;
        let w = self.params.step_weight(k);
        if self.n == 0 {
            let b = self.params.beta();
            self.a = 1.0;
            self.m2_t = 1.0;
            self.mean_s = b * w;
            self.m2_s = w * w;
            self.cross_st = w;
        } else {
            let n = self.n as f64;
            let growth = 1.0 + alpha / n;
            // E[X_k], E[X_k T_n], E[X_k S_n]
            let mean_x = self.params.beta() * self.a * alpha / n;
            let x_t = alpha * self.m2_t / n;
            let x_s = alpha * self.cross_st / n;
            self.m2_s += 2.0 * w * x_s + w * w;
            self.cross_st = self.cross_st * growth + w * (1.0 + x_t);
            self.m2_t += 2.0 * x_t + 1.0;
            self.mean_s += w * mean_x;
            self.a *= growth;
        }
        self.n = k;
    }
}

impl Iterator for MomentRecursion {
    type Item = MomentRow;

    fn next(&mut self) -> Option<MomentRow> {
        self.step();
        Some(self.row())
    }
}

/// Rows at each requested `n` (sorted), computed in one pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTable {
    pub rows: Vec<MomentRow>,
}

impl MomentTable {
    pub fn compute(params: &ModelParams, checkpoints: &[u64]) -> Self {
        let mut rec = MomentRecursion::new(*params);
        let mut rows = Vec::with_capacity(checkpoints.len());
        for &c in checkpoints {
            while rec.n < c {
                rec.step();
            }
            rows.push(rec.row());
        }
        Self { rows }
    }
}

fn row_at(params: &ModelParams, n: u64) -> MomentRow {
    let mut rec = MomentRecursion::new(*params);
    while rec.n < n {
        rec.step();
    }
    rec.row()
}

/// `E[T_n] = β a_n`.
pub fn mean_t(params: &ModelParams, n: u64) -> f64 {
    if n == 0 {
        0.0
    } else {
        params.beta() * factor_ratio(params.alpha(), 1, n)
    }
}

/// `E[T_n²]` from `E[T_{k+1}²] = E[T_k²](1 + 2α/k) + 1`.
pub fn second_moment_t(params: &ModelParams, n: u64) -> f64 {
    let alpha = params.alpha();
    (1..n).fold(if n == 0 { 0.0 } else { 1.0 }, |m2, k| {
        m2 * (1.0 + 2.0 * alpha / k as f64) + 1.0
    })
}

pub fn mean_s(params: &ModelParams, n: u64) -> f64 {
    row_at(params, n).mean_s
}

pub fn second_moment_s(params: &ModelParams, n: u64) -> f64 {
    row_at(params, n).m2_s
}

/// `E[X_k T_k] = 1 + α E[T_{k−1}²]/(k−1)` (and 1 for `k = 1`).
fn self_cross(params: &ModelParams, k: u64) -> f64 {
    if k == 1 {
        1.0
    } else {
        1.0 + params.alpha() * second_moment_t(params, k - 1) / (k - 1) as f64
    }
}

/// `E[X_k T_m]` for `1 ≤ k ≤ m`.
pub fn cross_moment_xt(params: &ModelParams, k: u64, m: u64) -> Result<f64, ExactError> {
    if k == 0 || k > m {
        return Err(ExactError::BadIndices { k, m });
    }
    Ok(self_cross(params, k) * factor_ratio(params.alpha(), k, m))
}

/// `E[T_l T_m] = (a_m / a_l) E[T_l²]` for `1 ≤ l ≤ m`, with the ratio taken as a
/// direct product so it is defined at `α = −1` as well.
pub fn correlation_t(params: &ModelParams, l: u64, m: u64) -> Result<f64, ExactError> {
    if l == 0 || l > m {
        return Err(ExactError::BadIndices { k: l, m });
    }
    Ok(second_moment_t(params, l) * factor_ratio(params.alpha(), l, m))
}

/// `E[S_n²]` by the prefix-sum expansion
/// `Σ k^(−2γ) + 2 Σ_{m≥2} α a_{m−1} / ((m−1) m^γ) · Σ_{k<m} g_k / (a_k k^γ)`.
///
/// Independent of [`MomentRecursion`]; fails when some `a_k = 0` (`α = −1`).
pub fn second_moment_s_prefix(params: &ModelParams, n: u64) -> Result<f64, ExactError> {
    let alpha = params.alpha();
    let mut total = 0.0;
    let mut prefix = 0.0;
    let mut a_prev = 1.0; // a_{m−1}
    let mut m2_prev = 0.0; // E[T_{m−1}²]
    for m in 1..=n {
        let w = params.step_weight(m);
        let mf = m as f64;
        if m >= 2 {
            total += 2.0 * alpha * w / (mf - 1.0) * a_prev * prefix;
        }
        total += w * w;
        // extend the prefix with k = m
        let a_m = if m == 1 { 1.0 } else { a_prev * (1.0 + alpha / (mf - 1.0)) };
        if a_m == 0.0 {
            if m < n {
                return Err(ExactError::DegenerateFactors { k: m });
            }
        } else {
            let g = if m == 1 { 1.0 } else { 1.0 + alpha * m2_prev / (mf - 1.0) };
            prefix += g * w / a_m;
        }
        m2_prev = if m == 1 { 1.0 } else { m2_prev * (1.0 + 2.0 * alpha / (mf - 1.0)) + 1.0 };
        a_prev = a_m;
    }
    Ok(total)
}

/// Exact law of `T_n`, stored by the number of up-steps `H_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TnDistribution {
    pub n: u64,
    /// `by_ups[h] = P(H_n = h)`, i.e. `P(T_n = 2h − n)`.
    pub by_ups: Vec<f64>,
}

impl TnDistribution {
    pub fn probability(&self, t: i64) -> f64 {
        let twice_h = t + self.n as i64;
        if twice_h < 0 || twice_h % 2 != 0 || twice_h / 2 > self.n as i64 {
            return 0.0;
        }
        self.by_ups[(twice_h / 2) as usize]
    }

    /// `(T value, probability)` pairs in increasing `T`.
    pub fn support(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        let n = self.n as i64;
        self.by_ups
            .iter()
            .enumerate()
            .map(move |(h, &p)| (2 * h as i64 - n, p))
    }

    pub fn mean(&self) -> f64 {
        self.support().map(|(t, p)| t as f64 * p).sum()
    }

    pub fn second_moment(&self) -> f64 {
        self.support().map(|(t, p)| (t * t) as f64 * p).sum()
    }

    pub fn total(&self) -> f64 {
        self.by_ups.iter().sum()
    }
}

/// Dynamic programme over the Markov chain `H_n`, O(n²).
pub fn exact_t_distribution(params: &ModelParams, n: u64) -> TnDistribution {
    let alpha = params.alpha();
    let mut dist = vec![1.0];
    for j in 0..n {
        let mut next = vec![0.0; dist.len() + 1];
        for (h, &p) in dist.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let up = if j == 0 {
                params.q()
            } else {
                alpha * h as f64 / j as f64 + (1.0 - alpha) / 2.0
            };
            next[h + 1] += p * up;
            next[h] += p * (1.0 - up);
        }
        dist = next;
    }
    TnDistribution { n, by_ups: dist }
}

/// `E[S_∞]` with a certified truncation error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitMean {
    pub value: f64,
    /// `|E[S_∞] − value| ≤ tail_bound` (up to rounding).
    pub tail_bound: f64,
    pub terms_used: u64,
}

const LIMIT_MAX_TERMS: u64 = 200_000_000;

/// `E[S_∞] = β + αβ Σ_{k≥1} a_k / (k (k+1)^γ)`.
///
/// The tail after `N` terms is sandwiched between integrals of `k^(α−1−γ)`
/// using the monotonicity of `a_k / k^α`; the returned value adds the midpoint
/// of that sandwich and `tail_bound` is its half-width.
pub fn limit_mean_s(params: &ModelParams, tol: f64) -> Result<LimitMean, ExactError> {
    let (alpha, beta, g) = (params.alpha(), params.beta(), params.gamma());
    let critical = gamma_c(alpha);
    if g <= critical {
        return Err(ExactError::NotConvergentRegime { gamma: g, critical });
    }
    let prefactor = alpha * beta;
    if prefactor == 0.0 {
        return Ok(LimitMean {
            value: beta,
            tail_bound: 0.0,
            terms_used: 0,
        });
    }
    // lim a_k / k^α
    let limit_ratio = if alpha == -1.0 { 0.0 } else { 1.0 / gamma(1.0 + alpha) };
    let excess = g - alpha;

    let mut sum = 0.0;
    let mut a = 1.0;
    let mut k: u64 = 0;
    loop {
        k += 1;
        if k > 1 {
            a *= 1.0 + alpha / (k - 1) as f64;
        }
        let kf = k as f64;
        sum += a / (kf * (kf + 1.0).powf(g));

        if k.is_multiple_of(1024) || k >= LIMIT_MAX_TERMS {
            let ratio_here = a / kf.powf(alpha);
            // a_k / k^α increases to its limit for α ≥ 0 and decreases for α < 0.
            let (upper, lower) = if alpha >= 0.0 {
                (limit_ratio, ratio_here)
            } else {
                (ratio_here, limit_ratio)
            };
            let hi = upper * kf.powf(-excess) / excess;
            let lo = lower * (kf + 2.0).powf(-excess) / excess;
            let value = beta + prefactor * (sum + 0.5 * (hi + lo));
            let tail_bound = prefactor.abs() * 0.5 * (hi - lo).max(0.0);
            if tail_bound <= tol {
                return Ok(LimitMean { value, tail_bound, terms_used: k });
            }
            if k >= LIMIT_MAX_TERMS {
                return Err(ExactError::ToleranceNotReached { value, tail_bound, terms: k });
            }
        }
    }
}

/// Leading-order `E[T_n²]`: `n/(1−2α)`, `n log n` or `n^{2α}/((2α−1)Γ(2α))`.
pub fn asymptotic_m2_t(alpha: f64, n: u64) -> f64 {
    let nf = n as f64;
    if alpha < 0.5 {
        nf / (1.0 - 2.0 * alpha)
    } else if alpha == 0.5 {
        nf * nf.ln()
    } else {
        nf.powf(2.0 * alpha) / ((2.0 * alpha - 1.0) * gamma(2.0 * alpha))
    }
}

/// Estimate of `E[S_∞²]` as `E[S_n²]` for the first `n` in a doubling sequence
/// at which the relative change drops below `rel_tol`.
pub fn limit_second_moment_s(
    params: &ModelParams,
    rel_tol: f64,
    n_max: u64,
) -> Result<(f64, u64), ExactError> {
    let critical = gamma_c(params.alpha());
    if params.gamma() <= critical {
        return Err(ExactError::NotConvergentRegime {
            gamma: params.gamma(),
            critical,
        });
    }
    let mut rec = MomentRecursion::new(*params);
    let mut target = 1024;
    let mut prev = f64::NAN;
    loop {
        while rec.n < target {
            rec.step();
        }
        let cur = rec.row().m2_s;
        if (cur - prev).abs() <= rel_tol * cur.abs() || target >= n_max {
            return Ok((cur, target));
        }
        prev = cur;
        target = (target * 2).min(n_max);
    }
}
