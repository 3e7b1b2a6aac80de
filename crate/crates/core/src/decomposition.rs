//! Pathwise Doob decomposition `S_n = M_n + A_n`.
//!
//! `M_n = Σ d_k` collects the innovations `d_k = (X_k − e_k) k^(−γ)` with
//! `e_k = E[X_k | F_{k−1}]`, and `A_n = Σ e_k k^(−γ)` is the predictable drift.
//! The drift satisfies `A_n = (α/γ)(S_n − T_n n^(−γ)) + R_n` with
//! `|R_n| ≤ |β| + (3 + σ₁)|α|`, `σ₁ = Σ_{k≥1} k^(−γ−1)`, and
//! [`Decomposition`] checks that bound on every step.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ModelParams, Step, StepObserver, WalkState};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecompError {
    #[error("|R_{n}| = {value} exceeds the bound {bound}")]
    BoundViolation { n: u64, value: f64, bound: f64 },
}

/// Number of terms summed explicitly in [`sigma1_upper`].
pub const SIGMA1_TERMS: u64 = 1_000_000;

/// Upper estimate of `σ₁ = Σ_{k≥1} k^(−γ−1)`: the partial sum to
/// [`SIGMA1_TERMS`] plus the integral bound `N^(−γ)/γ` on the tail.
pub fn sigma1_upper(gamma: f64) -> f64 {
    let n = SIGMA1_TERMS;
    let partial: f64 = (1..=n).rev().map(|k| (k as f64).powf(-gamma - 1.0)).sum();
    partial + (n as f64).powf(-gamma) / gamma
}

/// `|β| + (3 + σ₁)|α|`, the almost-sure bound on `|R_n|`.
pub fn remainder_bound(params: &ModelParams) -> f64 {
    let alpha = params.alpha().abs();
    if alpha == 0.0 {
        return params.beta().abs();
    }
    params.beta().abs() + (3.0 + sigma1_upper(params.gamma())) * alpha
}

/// `(d_k, e_k)` for the step `x` taken from `before` (so `k = before.n + 1`).
pub fn decompose_step(params: &ModelParams, before: &WalkState, x: Step) -> (f64, f64) {
    let e = params.conditional_mean(before);
    let d = (x.value() - e) * params.step_weight(before.n + 1);
    (d, e)
}

/// `A_n = β + α Σ_{k=1}^{n−1} T_k / (k (k+1)^γ)` from the history `T_1..T_{n−1}`.
pub fn drift_a(params: &ModelParams, history: &[i64]) -> f64 {
    let g = params.gamma();
    let sum: f64 = history
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let k = (i + 1) as f64;
            t as f64 / (k * (k + 1.0).powf(g))
        })
        .sum();
    params.beta() + params.alpha() * sum
}

/// `R_n = A_n − (α/γ)(S_n − T_n / n^γ)`.
pub fn remainder_r(params: &ModelParams, state: &WalkState, a: f64) -> f64 {
    if state.n == 0 {
        return a;
    }
    let scaled_t = state.t as f64 * params.step_weight(state.n);
    a - params.alpha() / params.gamma() * (state.s - scaled_t)
}

/// [`remainder_r`] checked against `bound`.
pub fn checked_remainder(
    params: &ModelParams,
    state: &WalkState,
    a: f64,
    bound: f64,
) -> Result<f64, DecompError> {
    let r = remainder_r(params, state, a);
    if exceeds(r, bound) {
        return Err(DecompError::BoundViolation {
            n: state.n,
            value: r,
            bound,
        });
    }
    Ok(r)
}

#[inline]
fn exceeds(r: f64, bound: f64) -> bool {
    r.abs() > bound * (1.0 + 1e-12) + 1e-12
}

/// `(1 − α/γ) S_n − (M_n − α T_n / (γ n^γ))`; algebraically equal to `R_n`.
pub fn residual_22(params: &ModelParams, state: &WalkState, m: f64) -> f64 {
    let ratio = params.alpha() / params.gamma();
    let scaled_t = if state.n == 0 {
        0.0
    } else {
        state.t as f64 * params.step_weight(state.n)
    };
    (1.0 - ratio) * state.s - (m - ratio * scaled_t)
}

/// `γ = α`: the coefficient of `S_n` in [`residual_22`] vanishes.
pub fn residual_22_degenerate(params: &ModelParams) -> bool {
    params.alpha() == params.gamma()
}

/// Expected, predictable and realised quadratic variation of `M` at step `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariationTriple {
    pub n: u64,
    pub s2: f64,
    pub v2: f64,
    pub u2: f64,
}

/// Streaming decomposition of one path; plug into `simulate_path` as an observer.
///
/// Keeps only running sums plus the path-independent `E[T_{k−1}²]` needed for `s_n²`.
#[derive(Debug, Clone)]
pub struct Decomposition {
    params: ModelParams,
    bound: f64,
    pub n: u64,
    pub m: f64,
    pub a: f64,
    pub v2: f64,
    pub u2: f64,
    pub s2: f64,
    m2_t: f64,
    /// `R_n` and `residual_22` at the current step.
    pub r: f64,
    pub resid22: f64,
    pub max_abs_r: f64,
    pub violations: u64,
    /// `max_k |S_k − (M_k + A_k)|`.
    pub max_identity_gap: f64,
    /// `max_k |residual_22 − R_k|`.
    pub max_resid22_gap: f64,
}

impl Decomposition {
    pub fn new(params: ModelParams) -> Self {
        Self::with_bound(params, remainder_bound(&params))
    }

    /// Uses a precomputed `|R_n|` bound (computing `σ₁` is comparatively slow).
    pub fn with_bound(params: ModelParams, bound: f64) -> Self {
        Self {
            params,
            bound,
            n: 0,
            m: 0.0,
            a: 0.0,
            v2: 0.0,
            u2: 0.0,
            s2: 0.0,
            m2_t: 0.0,
            r: 0.0,
            resid22: 0.0,
            max_abs_r: 0.0,
            violations: 0,
            max_identity_gap: 0.0,
            max_resid22_gap: 0.0,
        }
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn variation(&self) -> VariationTriple {
        VariationTriple {
            n: self.n,
            s2: self.s2,
            v2: self.v2,
            u2: self.u2,
        }
    }

    /// Current `R_n`, or `BoundViolation` if it ever left the bound.
    pub fn checked_r(&self) -> Result<f64, DecompError> {
        if self.violations > 0 || exceeds(self.r, self.bound) {
            return Err(DecompError::BoundViolation {
                n: self.n,
                value: self.max_abs_r,
                bound: self.bound,
            });
        }
        Ok(self.r)
    }
}

impl StepObserver for Decomposition {
    #[inline]
    fn observe(&mut self, before: &WalkState, step: Step, weight: f64, after: &WalkState) {
        let p = &self.params;
        let (alpha, ratio) = (p.alpha(), p.alpha() / p.gamma());
        let e = p.conditional_mean(before);
        let d = (step.value() - e) * weight;
        let w2 = weight * weight;

        let innovation_var = if before.n == 0 {
            1.0 - p.beta() * p.beta()
        } else {
            let k1 = before.n as f64;
            1.0 - alpha * alpha * self.m2_t / (k1 * k1)
        };
        self.m2_t = if before.n == 0 {
            1.0
        } else {
            self.m2_t * (1.0 + 2.0 * alpha / before.n as f64) + 1.0
        };

        self.n = after.n;
        self.m += d;
        self.a += e * weight;
        self.v2 += (1.0 - e * e) * w2;
        self.u2 += d * d;
        self.s2 += innovation_var * w2;

        // weight = n^(−γ) for the post-step n
        let scaled_t = after.t as f64 * weight;
        self.r = self.a - ratio * (after.s - scaled_t);
        self.resid22 = (1.0 - ratio) * after.s - (self.m - ratio * scaled_t);

        let abs_r = self.r.abs();
        if abs_r > self.max_abs_r {
            self.max_abs_r = abs_r;
        }
        if exceeds(self.r, self.bound) {
            self.violations += 1;
        }
        let gap = (after.s - (self.m + self.a)).abs();
        if gap > self.max_identity_gap {
            self.max_identity_gap = gap;
        }
        let gap = (self.resid22 - self.r).abs();
        if gap > self.max_resid22_gap {
            self.max_resid22_gap = gap;
        }
    }
}

/// Quadratic variations along a given sign sequence, recorded at `checkpoints`.
pub fn variations(params: &ModelParams, path: &[Step], checkpoints: &[u64]) -> Vec<VariationTriple> {
    let mut dec = Decomposition::with_bound(*params, f64::INFINITY);
    let mut state = WalkState::origin();
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next = checkpoints.iter().peekable();
    for &x in path {
        let w = params.step_weight(state.n + 1);
        let after = state.push(x, w);
        dec.observe(&state, x, w, &after);
        state = after;
        while next.peek().is_some_and(|&&c| c <= state.n) {
            if *next.next().unwrap() == state.n {
                out.push(dec.variation());
            }
        }
    }
    out
}
