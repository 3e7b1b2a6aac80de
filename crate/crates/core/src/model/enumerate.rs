use thiserror::Error;

use super::{ModelParams, Step, WalkState};

/// Largest horizon accepted by [`enumerate_paths`] (`2^20` paths).
pub const MAX_ENUMERATION_HORIZON: u32 = 20;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("horizon {requested} exceeds the enumeration cap {cap}")]
pub struct HorizonTooLarge {
    pub requested: u32,
    pub cap: u32,
}

/// One sign sequence with its exact probability.
///
/// Bit `k − 1` of `signs` is set iff `X_k = +1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathEntry {
    pub signs: u32,
    pub probability: f64,
    pub t: i64,
    pub s: f64,
}

impl PathEntry {
    /// The `k`-th step, `1 ≤ k ≤ n`.
    pub fn step(&self, k: u32) -> Step {
        if self.signs >> (k - 1) & 1 == 1 {
            Step::Plus
        } else {
            Step::Minus
        }
    }

    /// State after the first `m` steps of this path.
    pub fn prefix(&self, params: &ModelParams, m: u32) -> WalkState {
        (1..=m).fold(WalkState::origin(), |st, k| {
            st.push(self.step(k), params.step_weight(k as u64))
        })
    }
}

/// Exact joint law of `(X_1, …, X_n)`.
#[derive(Debug, Clone)]
pub struct PathDistribution {
    pub n: u32,
    pub entries: Vec<PathEntry>,
}

impl PathDistribution {
    /// `E[f(path)]`.
    pub fn expect<F: Fn(&PathEntry) -> f64>(&self, f: F) -> f64 {
        self.entries.iter().map(|e| e.probability * f(e)).sum()
    }

    pub fn total_probability(&self) -> f64 {
        self.entries.iter().map(|e| e.probability).sum()
    }
}

/// Enumerates all `2^n` sign sequences, assigning each its probability by the
/// chain rule over [`ModelParams::plus_probability`].
pub fn enumerate_paths(params: &ModelParams, n: u32) -> Result<PathDistribution, HorizonTooLarge> {
    if n > MAX_ENUMERATION_HORIZON {
        return Err(HorizonTooLarge {
            requested: n,
            cap: MAX_ENUMERATION_HORIZON,
        });
    }
    let weights: Vec<f64> = (1..=n as u64).map(|k| params.step_weight(k)).collect();
    let entries = (0..1u32 << n)
        .map(|signs| {
            let mut state = WalkState::origin();
            let mut probability = 1.0;
            for k in 0..n {
                let p_plus = params.plus_probability(&state);
                let x = if signs >> k & 1 == 1 { Step::Plus } else { Step::Minus };
                probability *= match x {
                    Step::Plus => p_plus,
                    Step::Minus => 1.0 - p_plus,
                };
                state = state.push(x, weights[k as usize]);
            }
            PathEntry {
                signs,
                probability,
                t: state.t,
                s: state.s,
            }
        })
        .collect();
    Ok(PathDistribution { n, entries })
}
