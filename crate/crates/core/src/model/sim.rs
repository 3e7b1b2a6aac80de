use rand::Rng;

use super::{draw_step, ModelParams, Step, WalkState};

/// Receives every transition of a simulated path.
///
/// `weight` is the length `k^(−γ)` of the step just taken, where `k = after.n`.
pub trait StepObserver {
    fn observe(&mut self, before: &WalkState, step: Step, weight: f64, after: &WalkState);
}

/// Observer that ignores everything.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoObserver;

impl StepObserver for NoObserver {
    #[inline(always)]
    fn observe(&mut self, _: &WalkState, _: Step, _: f64, _: &WalkState) {}
}

impl<O: StepObserver + ?Sized> StepObserver for &mut O {
    #[inline(always)]
    fn observe(&mut self, before: &WalkState, step: Step, weight: f64, after: &WalkState) {
        (**self).observe(before, step, weight, after)
    }
}

impl<A: StepObserver, B: StepObserver> StepObserver for (A, B) {
    #[inline(always)]
    fn observe(&mut self, before: &WalkState, step: Step, weight: f64, after: &WalkState) {
        self.0.observe(before, step, weight, after);
        self.1.observe(before, step, weight, after);
    }
}

/// Source of step lengths `k^(−γ)`.
pub trait StepLength {
    fn length(&self, k: u64) -> f64;
}

impl StepLength for ModelParams {
    #[inline]
    fn length(&self, k: u64) -> f64 {
        self.step_weight(k)
    }
}

/// Precomputed table of `k^(−γ)` for `k = 1..=n_max`.
///
/// Entries are bit-identical to [`ModelParams::step_weight`], so a walk driven
/// by the table reproduces one driven by direct evaluation exactly.
#[derive(Debug, Clone)]
pub struct StepWeights {
    gamma: f64,
    table: Vec<f64>,
}

impl StepWeights {
    pub fn new(params: &ModelParams, n_max: u64) -> Self {
        let table = (1..=n_max).map(|k| params.step_weight(k)).collect();
        Self {
            gamma: params.gamma(),
            table,
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn n_max(&self) -> u64 {
        self.table.len() as u64
    }
}

impl StepLength for StepWeights {
    #[inline(always)]
    fn length(&self, k: u64) -> f64 {
        self.table[(k - 1) as usize]
    }
}

/// A single path advanced one uniform variate per step.
pub struct Walker<'a, W: StepLength> {
    params: ModelParams,
    lengths: &'a W,
    state: WalkState,
}

impl<'a, W: StepLength> Walker<'a, W> {
    pub fn new(params: ModelParams, lengths: &'a W) -> Self {
        Self {
            params,
            lengths,
            state: WalkState::origin(),
        }
    }

    pub fn state(&self) -> &WalkState {
        &self.state
    }

    /// Advances until `state.n == target` (no-op if already there or past it).
    #[inline]
    pub fn run_to<R: Rng + ?Sized, O: StepObserver>(
        &mut self,
        target: u64,
        rng: &mut R,
        observer: &mut O,
    ) {
        let params = self.params;
        let mut state = self.state;
        while state.n < target {
            let u: f64 = rng.random();
            let x = draw_step(&params, &state, u);
            let weight = self.lengths.length(state.n + 1);
            let next = state.push(x, weight);
            observer.observe(&state, x, weight, &next);
            state = next;
        }
        self.state = state;
    }
}

/// Simulates one path to `n_max` with O(1) working state, returning the state
/// at every checkpoint `≤ n_max`.
pub fn simulate_path<R: Rng + ?Sized, O: StepObserver>(
    params: &ModelParams,
    n_max: u64,
    rng: &mut R,
    checkpoints: &[u64],
    observer: &mut O,
) -> Vec<WalkState> {
    let mut walker = Walker::new(*params, params);
    let mut snapshots = Vec::with_capacity(checkpoints.len());
    for &c in checkpoints.iter().filter(|&&c| c >= 1 && c <= n_max) {
        walker.run_to(c, rng, observer);
        snapshots.push(*walker.state());
    }
    walker.run_to(n_max, rng, observer);
    snapshots
}

/// Literal memory-resampling construction: step `n+1` picks a uniformly random
/// earlier step and repeats it with probability `p`, otherwise reverses it.
///
/// Stores the whole history; intended for checking the law of [`simulate_path`].
pub fn simulate_path_resampling<R: Rng + ?Sized>(
    params: &ModelParams,
    n_max: u64,
    rng: &mut R,
) -> WalkState {
    let mut history: Vec<Step> = Vec::with_capacity(n_max as usize);
    let mut state = WalkState::origin();
    for n in 0..n_max {
        let x = if n == 0 {
            if rng.random::<f64>() < params.q() {
                Step::Plus
            } else {
                Step::Minus
            }
        } else {
            let remembered = history[rng.random_range(0..n as usize)];
            if rng.random::<f64>() < params.p() {
                remembered
            } else {
                Step::from_sign(-remembered.sign())
            }
        };
        history.push(x);
        state = state.push(x, params.step_weight(n + 1));
    }
    state
}
