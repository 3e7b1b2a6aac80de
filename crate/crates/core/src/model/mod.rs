//! Parameters, the step law and simulation of the decaying-step walk.

mod enumerate;
mod sim;

pub use enumerate::{
    enumerate_paths, HorizonTooLarge, PathDistribution, PathEntry, MAX_ENUMERATION_HORIZON,
};
pub use sim::{
    simulate_path, simulate_path_resampling, NoObserver, StepLength, StepObserver, StepWeights,
    Walker,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("parameter `{0}` is out of range")]
    OutOfRange(&'static str),
    #[error("decay exponent gamma must be strictly positive")]
    NonPositiveGamma,
    #[error("parameter `{0}` is not a finite number")]
    NotFinite(&'static str),
}

/// Validated model parameters.
///
/// `alpha = 2p − 1` is the memory parameter, `beta = 2q − 1` the bias of the
/// first step and `gamma > 0` the step-decay exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ModelParams {
    alpha: f64,
    beta: f64,
    gamma: f64,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    alpha: f64,
    beta: f64,
    gamma: f64,
}

impl TryFrom<RawParams> for ModelParams {
    type Error = ParamError;

    fn try_from(raw: RawParams) -> Result<Self, Self::Error> {
        ModelParams::new(raw.alpha, raw.beta, raw.gamma)
    }
}

impl From<ModelParams> for RawParams {
    fn from(p: ModelParams) -> Self {
        RawParams {
            alpha: p.alpha,
            beta: p.beta,
            gamma: p.gamma,
        }
    }
}

impl ModelParams {
    /// Validates `(alpha, beta, gamma)`.
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self, ParamError> {
        for (name, v) in [("alpha", alpha), ("beta", beta), ("gamma", gamma)] {
            if !v.is_finite() {
                return Err(ParamError::NotFinite(name));
            }
        }
        if !(-1.0..=1.0).contains(&alpha) {
            return Err(ParamError::OutOfRange("alpha"));
        }
        if !(-1.0..=1.0).contains(&beta) {
            return Err(ParamError::OutOfRange("beta"));
        }
        if gamma <= 0.0 {
            return Err(ParamError::NonPositiveGamma);
        }
        Ok(Self { alpha, beta, gamma })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Probability of repeating the remembered step.
    pub fn p(&self) -> f64 {
        (1.0 + self.alpha) / 2.0
    }

    /// Probability that the first step is `+1`.
    pub fn q(&self) -> f64 {
        (1.0 + self.beta) / 2.0
    }

    /// Length of the `k`-th step, `k^(−γ)`.
    #[inline]
    pub fn step_weight(&self, k: u64) -> f64 {
        (k as f64).powf(-self.gamma)
    }

    /// Conditional probability that the next step is `+1` given the state.
    ///
    /// For `n ≥ 1` this is `α·H_n/n + (1 − α)/2`; before the first step it is `q`.
    #[inline]
    pub fn plus_probability(&self, state: &WalkState) -> f64 {
        if state.n == 0 {
            self.q()
        } else {
            self.alpha * state.h as f64 / state.n as f64 + (1.0 - self.alpha) / 2.0
        }
    }

    /// `E[X_{n+1} | F_n]`: `β` before the first step, `α·T_n/n` afterwards.
    #[inline]
    pub fn conditional_mean(&self, state: &WalkState) -> f64 {
        if state.n == 0 {
            self.beta
        } else {
            self.alpha * state.t as f64 / state.n as f64
        }
    }
}

/// A single unit step of the underlying walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Step {
    Plus,
    Minus,
}

impl Step {
    pub fn sign(self) -> i64 {
        match self {
            Step::Plus => 1,
            Step::Minus => -1,
        }
    }

    pub fn value(self) -> f64 {
        self.sign() as f64
    }

    pub fn from_sign(sign: i64) -> Self {
        if sign > 0 {
            Step::Plus
        } else {
            Step::Minus
        }
    }
}

/// O(1) cursor along a trajectory.
///
/// `t` is the unit-step position `T_n`, `h` the number of `+1` steps `H_n`
/// and `s` the decayed position `S_n`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WalkState {
    pub n: u64,
    pub t: i64,
    pub h: u64,
    pub s: f64,
}

impl WalkState {
    pub fn origin() -> Self {
        Self::default()
    }

    /// Applies step `x` of length `weight` (which must be `(n+1)^(−γ)`).
    #[inline(always)]
    pub fn push(&self, x: Step, weight: f64) -> WalkState {
        let plus = matches!(x, Step::Plus) as u64;
        let sign = 2 * plus as i64 - 1;
        WalkState {
            n: self.n + 1,
            t: self.t + sign,
            h: self.h + plus,
            s: self.s + sign as f64 * weight,
        }
    }

    /// Parity and range invariants of the integer part of the state.
    pub fn is_consistent(&self) -> bool {
        self.h <= self.n
            && self.t == 2 * self.h as i64 - self.n as i64
            && self.t.unsigned_abs() <= self.n
    }
}

/// Samples the next step from the uniform variate `u ∈ [0, 1)`.
///
/// `X_{n+1} = +1` iff `u < plus_probability`, evaluated as
/// `u·n < α·H_n + n(1 − α)/2` to keep a division off the hot path.
#[inline(always)]
pub fn draw_step(params: &ModelParams, state: &WalkState, u: f64) -> Step {
    let plus = if state.n == 0 {
        u < params.q()
    } else {
        // both counts are far below 2^63; the signed conversion is cheaper
        let n = state.n as i64 as f64;
        u * n < params.alpha * state.h as i64 as f64 + 0.5 * (1.0 - params.alpha) * n
    };
    if plus {
        Step::Plus
    } else {
        Step::Minus
    }
}

/// One transition of the walk driven by the uniform variate `u`.
pub fn advance(state: &WalkState, params: &ModelParams, u: f64) -> WalkState {
    let x = draw_step(params, state, u);
    state.push(x, params.step_weight(state.n + 1))
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CheckpointError {
    #[error("checkpoints must be at least 1")]
    Zero,
    #[error("geometric checkpoint spec needs 1 <= from <= to and count >= 1")]
    BadGeometric,
}

/// Sorted, de-duplicated list of step indices `≥ 1` at which to record state.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Checkpoints(Vec<u64>);

impl Checkpoints {
    pub fn new(mut points: Vec<u64>) -> Result<Self, CheckpointError> {
        points.sort_unstable();
        points.dedup();
        if points.first() == Some(&0) {
            return Err(CheckpointError::Zero);
        }
        Ok(Self(points))
    }

    /// `count` geometrically spaced points from `from` to `to`, rounded and
    /// de-duplicated (so fewer than `count` may remain when the range is short).
    pub fn geometric(count: usize, from: u64, to: u64) -> Result<Self, CheckpointError> {
        if count == 0 || from == 0 || from > to {
            return Err(CheckpointError::BadGeometric);
        }
        if count == 1 {
            return Self::new(vec![to]);
        }
        let (lo, hi) = ((from as f64).ln(), (to as f64).ln());
        let points = (0..count)
            .map(|i| {
                let x = lo + (hi - lo) * i as f64 / (count - 1) as f64;
                (x.exp().round() as u64).clamp(from, to)
            })
            .collect();
        Self::new(points)
    }

    pub fn single(n: u64) -> Result<Self, CheckpointError> {
        Self::new(vec![n])
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> Option<u64> {
        self.0.last().copied()
    }

    /// Points not exceeding `n_max`.
    pub fn up_to(&self, n_max: u64) -> &[u64] {
        let end = self.0.partition_point(|&c| c <= n_max);
        &self.0[..end]
    }
}

/// `Σ_{k=1..n} k^(−γ)`, the largest possible `|S_n|`.
pub fn max_displacement(gamma: f64, n: u64) -> f64 {
    (1..=n).rev().map(|k| (k as f64).powf(-gamma)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(ModelParams::new(0.5, 1.0, 0.75).is_ok());
        assert_eq!(
            ModelParams::new(1.2, 0.0, 0.5),
            Err(ParamError::OutOfRange("alpha"))
        );
        assert_eq!(
            ModelParams::new(0.0, -1.5, 0.5),
            Err(ParamError::OutOfRange("beta"))
        );
        assert_eq!(
            ModelParams::new(0.0, 0.0, 0.0),
            Err(ParamError::NonPositiveGamma)
        );
        assert_eq!(
            ModelParams::new(f64::NAN, 0.0, 1.0),
            Err(ParamError::NotFinite("alpha"))
        );
        assert!(ModelParams::new(-1.0, -1.0, 1e-9).is_ok());
    }

    #[test]
    fn serde_rejects_invalid() {
        let ok: ModelParams = serde_json_like(0.1, 0.2, 0.3).unwrap();
        assert_eq!(ok.gamma(), 0.3);
        assert!(serde_json_like(0.1, 0.2, -0.3).is_err());
    }

    fn serde_json_like(a: f64, b: f64, g: f64) -> Result<ModelParams, ParamError> {
        ModelParams::try_from(RawParams {
            alpha: a,
            beta: b,
            gamma: g,
        })
    }

    #[test]
    fn plus_probability_examples() {
        let p = ModelParams::new(0.0, 0.3, 0.5).unwrap();
        let s = WalkState { n: 5, t: 3, h: 4, s: 0.0 };
        assert_eq!(p.plus_probability(&s), 0.5);

        let p = ModelParams::new(1.0, 0.0, 0.5).unwrap();
        let s = WalkState { n: 4, t: 2, h: 3, s: 0.0 };
        assert_eq!(p.plus_probability(&s), 0.75);

        let p = ModelParams::new(-1.0, 0.0, 0.5).unwrap();
        let s = WalkState { n: 2, t: 2, h: 2, s: 0.0 };
        assert_eq!(p.plus_probability(&s), 0.0);

        let p = ModelParams::new(0.3, 0.5, 0.5).unwrap();
        assert_eq!(p.plus_probability(&WalkState::origin()), 0.75);
    }

    #[test]
    fn first_step_forced_by_beta() {
        let p = ModelParams::new(0.3, 1.0, 0.7).unwrap();
        for u in [0.0, 0.5, 0.999_999] {
            let s = advance(&WalkState::origin(), &p, u);
            assert_eq!((s.n, s.t, s.h, s.s), (1, 1, 1, 1.0));
        }
    }

    #[test]
    fn full_memory_all_plus() {
        let p = ModelParams::new(1.0, 1.0, 0.4).unwrap();
        let mut s = WalkState::origin();
        for i in 0..200u32 {
            s = advance(&s, &p, (i as f64 * 0.618_033_988_7).fract());
        }
        assert_eq!(s.t, 200);
        assert!((s.s - max_displacement(0.4, 200)).abs() < 1e-12);
    }

    #[test]
    fn checkpoints() {
        let c = Checkpoints::new(vec![5, 1, 5, 3]).unwrap();
        assert_eq!(c.as_slice(), &[1, 3, 5]);
        assert_eq!(c.up_to(4), &[1, 3]);
        assert_eq!(Checkpoints::new(vec![0, 2]), Err(CheckpointError::Zero));

        let g = Checkpoints::geometric(4, 1000, 1_000_000).unwrap();
        assert_eq!(g.as_slice(), &[1000, 10_000, 100_000, 1_000_000]);
        let g = Checkpoints::geometric(20, 1, 5).unwrap();
        assert_eq!(g.as_slice(), &[1, 2, 3, 4, 5]);
        assert!(Checkpoints::geometric(3, 10, 5).is_err());
    }
}
