//! Reproducible parallel ensembles.
//!
//! Trials are cut into fixed chunks of [`CHUNK_TRIALS`]; each chunk is simulated
//! by one worker into private accumulators and the chunk results are folded in
//! chunk order. The output is therefore bit-identical for any thread count.

mod experiments;
mod seed;
mod stats;

pub use experiments::{
    clt_moments, drift_coupling, drift_residual, oscillation_census, variance_scaling_fit,
    CltMoments, DriftCoupling, DriftResidual, OscillationCensus, ScalingFit, ScalingSource,
    Statistic,
};
pub use seed::{splitmix64, PathRng, SeedSpec};
pub use stats::{median, pearson, EnsembleStats, Histogram};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decomposition::{remainder_bound, Decomposition};
use crate::model::{
    draw_step, ModelParams, NoObserver, Step, StepLength, StepObserver, StepWeights, WalkState,
    Walker,
};

/// Trials per work unit.
pub const CHUNK_TRIALS: u64 = 64;

/// Default cap on `trials × checkpoints`.
pub const DEFAULT_RECORD_BUDGET: u64 = 1 << 28;

/// Horizons above this use `powf` per step instead of a weight table.
const MAX_TABLE_LEN: u64 = 1 << 24;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum McError {
    #[error("invalid ensemble configuration: {0}")]
    InvalidConfig(String),
    #[error("{needed} trial records exceed the budget of {budget}")]
    ResourceLimit { needed: u64, budget: u64 },
    #[error("no central limit theorem is available at alpha = {alpha}, gamma = {gamma}")]
    NoCentralLimit { alpha: f64, gamma: f64 },
}

/// What to collect besides `T`, `S` and sign changes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observables {
    /// Run the pathwise decomposition alongside each path.
    pub decomposition: bool,
    /// Keep every trial's checkpoint snapshots.
    pub per_trial: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub params: ModelParams,
    pub n_max: u64,
    pub trials: u64,
    /// Sorted, distinct, each in `1..=n_max`.
    pub checkpoints: Vec<u64>,
    pub seed: u64,
    pub observables: Observables,
    /// Cap on `trials × checkpoints`.
    pub record_budget: u64,
}

impl EnsembleConfig {
    /// Snapshots at `n_max` only, no extra observables.
    pub fn new(params: ModelParams, n_max: u64, trials: u64, seed: u64) -> Self {
        Self {
            params,
            n_max,
            trials,
            checkpoints: vec![n_max],
            seed,
            observables: Observables::default(),
            record_budget: DEFAULT_RECORD_BUDGET,
        }
    }

    pub fn with_checkpoints(mut self, checkpoints: &[u64]) -> Self {
        self.checkpoints = checkpoints.to_vec();
        self
    }

    pub fn with_observables(mut self, observables: Observables) -> Self {
        self.observables = observables;
        self
    }

    fn validate(&self) -> Result<(), McError> {
        if self.trials == 0 {
            return Err(McError::InvalidConfig("trials must be at least 1".into()));
        }
        if self.checkpoints.is_empty() {
            return Err(McError::InvalidConfig("no checkpoints".into()));
        }
        if self.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(McError::InvalidConfig(
                "checkpoints must be strictly increasing".into(),
            ));
        }
        if self.checkpoints[0] == 0 || *self.checkpoints.last().unwrap() > self.n_max {
            return Err(McError::InvalidConfig(format!(
                "checkpoints must lie in 1..={}",
                self.n_max
            )));
        }
        let needed = self.trials.saturating_mul(self.checkpoints.len() as u64);
        if needed > self.record_budget {
            return Err(McError::ResourceLimit {
                needed,
                budget: self.record_budget,
            });
        }
        Ok(())
    }
}

/// Counts strict sign changes `S_{k−1} S_k < 0` and remembers the last one.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SignChanges {
    pub count: u64,
    /// Step index of the most recent change, 0 if none.
    pub last: u64,
}

impl StepObserver for SignChanges {
    #[inline(always)]
    fn observe(&mut self, before: &WalkState, _: Step, _: f64, after: &WalkState) {
        if before.s * after.s < 0.0 {
            self.count += 1;
            self.last = after.n;
        }
    }
}

/// Decomposition values of one path at a checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecompSnapshot {
    pub m: f64,
    pub a: f64,
    pub r: f64,
    pub resid22: f64,
    pub v2: f64,
    pub u2: f64,
    pub s2: f64,
    /// Running maxima and counters up to this checkpoint.
    pub max_abs_r: f64,
    pub violations: u64,
    pub max_identity_gap: f64,
    pub max_resid22_gap: f64,
}

impl DecompSnapshot {
    fn of(d: &Decomposition) -> Self {
        Self {
            m: d.m,
            a: d.a,
            r: d.r,
            resid22: d.resid22,
            v2: d.v2,
            u2: d.u2,
            s2: d.s2,
            max_abs_r: d.max_abs_r,
            violations: d.violations,
            max_identity_gap: d.max_identity_gap,
            max_resid22_gap: d.max_resid22_gap,
        }
    }
}

/// One path at one checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialSnapshot {
    pub n: u64,
    pub t: i64,
    pub s: f64,
    pub sign_changes: u64,
    pub last_sign_change: u64,
    pub decomp: Option<DecompSnapshot>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub snapshots: Vec<TrialSnapshot>,
}

/// Ensemble view of the decomposition at one checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecompSummary {
    pub m: EnsembleStats,
    pub a: EnsembleStats,
    pub r: EnsembleStats,
    pub v2: EnsembleStats,
    pub u2: EnsembleStats,
    /// Path-independent `s_n²`.
    pub s2: f64,
    pub bound: f64,
    pub max_abs_r: f64,
    pub violations: u64,
    pub max_identity_gap: f64,
    pub max_resid22_gap: f64,
}

impl DecompSummary {
    fn empty(bound: f64) -> Self {
        Self {
            m: EnsembleStats::new(),
            a: EnsembleStats::new(),
            r: EnsembleStats::new(),
            v2: EnsembleStats::new(),
            u2: EnsembleStats::new(),
            s2: 0.0,
            bound,
            max_abs_r: 0.0,
            violations: 0,
            max_identity_gap: 0.0,
            max_resid22_gap: 0.0,
        }
    }

    fn push(&mut self, d: &DecompSnapshot) {
        self.m.push(d.m);
        self.a.push(d.a);
        self.r.push(d.r);
        self.v2.push(d.v2);
        self.u2.push(d.u2);
        self.s2 = d.s2;
        self.max_abs_r = self.max_abs_r.max(d.max_abs_r);
        self.violations += d.violations;
        self.max_identity_gap = self.max_identity_gap.max(d.max_identity_gap);
        self.max_resid22_gap = self.max_resid22_gap.max(d.max_resid22_gap);
    }

    fn merge(&self, o: &Self) -> Self {
        Self {
            m: self.m.merge(&o.m),
            a: self.a.merge(&o.a),
            r: self.r.merge(&o.r),
            v2: self.v2.merge(&o.v2),
            u2: self.u2.merge(&o.u2),
            s2: if o.m.count > 0 { o.s2 } else { self.s2 },
            bound: self.bound,
            max_abs_r: self.max_abs_r.max(o.max_abs_r),
            violations: self.violations + o.violations,
            max_identity_gap: self.max_identity_gap.max(o.max_identity_gap),
            max_resid22_gap: self.max_resid22_gap.max(o.max_resid22_gap),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckpointSummary {
    pub n: u64,
    pub t: EnsembleStats,
    pub s: EnsembleStats,
    pub sign_changes: EnsembleStats,
    pub decomp: Option<DecompSummary>,
}

impl CheckpointSummary {
    fn empty(n: u64, decomp_bound: Option<f64>) -> Self {
        Self {
            n,
            t: EnsembleStats::new(),
            s: EnsembleStats::new(),
            sign_changes: EnsembleStats::new(),
            decomp: decomp_bound.map(DecompSummary::empty),
        }
    }

    fn push(&mut self, snap: &TrialSnapshot) {
        self.t.push(snap.t as f64);
        self.s.push(snap.s);
        self.sign_changes.push(snap.sign_changes as f64);
        if let (Some(acc), Some(d)) = (self.decomp.as_mut(), snap.decomp.as_ref()) {
            acc.push(d);
        }
    }

    fn merge(&self, o: &Self) -> Self {
        Self {
            n: self.n,
            t: self.t.merge(&o.t),
            s: self.s.merge(&o.s),
            sign_changes: self.sign_changes.merge(&o.sign_changes),
            decomp: match (&self.decomp, &o.decomp) {
                (Some(a), Some(b)) => Some(a.merge(b)),
                _ => None,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub config: EnsembleConfig,
    pub checkpoints: Vec<CheckpointSummary>,
    /// Present when `observables.per_trial` is set, ordered by trial index.
    pub trials: Option<Vec<TrialRecord>>,
}

impl EnsembleResult {
    pub fn at(&self, n: u64) -> Option<&CheckpointSummary> {
        self.checkpoints.iter().find(|c| c.n == n)
    }

    pub fn last(&self) -> &CheckpointSummary {
        self.checkpoints.last().expect("validated config has checkpoints")
    }
}

struct ChunkResult {
    summaries: Vec<CheckpointSummary>,
    records: Vec<TrialRecord>,
}

/// Simulates one trial and returns its checkpoint snapshots.
pub fn simulate_trial<W: StepLength>(
    params: &ModelParams,
    lengths: &W,
    checkpoints: &[u64],
    seed: SeedSpec,
    decomp_bound: Option<f64>,
) -> Vec<TrialSnapshot> {
    let mut rng = seed.rng();
    let mut walker = Walker::new(*params, lengths);
    let mut signs = SignChanges::default();
    let mut out = Vec::with_capacity(checkpoints.len());
    match decomp_bound {
        None => {
            for &c in checkpoints {
                walker.run_to(c, &mut rng, &mut (&mut signs, NoObserver));
                out.push(snapshot(walker.state(), &signs, None));
            }
        }
        Some(bound) => {
            let mut dec = Decomposition::with_bound(*params, bound);
            for &c in checkpoints {
                walker.run_to(c, &mut rng, &mut (&mut signs, &mut dec));
                out.push(snapshot(walker.state(), &signs, Some(DecompSnapshot::of(&dec))));
            }
        }
    }
    out
}

fn snapshot(state: &WalkState, signs: &SignChanges, decomp: Option<DecompSnapshot>) -> TrialSnapshot {
    TrialSnapshot {
        n: state.n,
        t: state.t,
        s: state.s,
        sign_changes: signs.count,
        last_sign_change: signs.last,
        decomp,
    }
}

/// Paths simulated in lockstep by [`simulate_lanes`].
pub const LANES: usize = 8;

/// Simulates `LANES` trials side by side, without decomposition.
///
/// Each lane performs exactly the arithmetic of [`simulate_trial`], so the
/// snapshots are bit-identical; interleaving independent paths only hides the
/// latency of the per-step dependency chain.
pub fn simulate_lanes<W: StepLength>(
    params: &ModelParams,
    lengths: &W,
    checkpoints: &[u64],
    seeds: [SeedSpec; LANES],
) -> [Vec<TrialSnapshot>; LANES] {
    let mut rngs = seeds.map(|s| s.rng());
    let mut states = [WalkState::origin(); LANES];
    let mut signs = [SignChanges::default(); LANES];
    let mut out: [Vec<TrialSnapshot>; LANES] =
        std::array::from_fn(|_| Vec::with_capacity(checkpoints.len()));
    let mut n = 0;
    for &c in checkpoints {
        while n < c {
            let w = lengths.length(n + 1);
            for l in 0..LANES {
                let u: f64 = rngs[l].random();
                let before = states[l];
                let x = draw_step(params, &before, u);
                let after = before.push(x, w);
                signs[l].observe(&before, x, w, &after);
                states[l] = after;
            }
            n += 1;
        }
        for l in 0..LANES {
            out[l].push(snapshot(&states[l], &signs[l], None));
        }
    }
    out
}

fn chunk_snapshots<W: StepLength>(
    config: &EnsembleConfig,
    lengths: &W,
    decomp_bound: Option<f64>,
    trials: std::ops::Range<u64>,
) -> Vec<Vec<TrialSnapshot>> {
    let params = &config.params;
    let seed = |t| SeedSpec::new(config.seed, t);
    let mut out = Vec::with_capacity((trials.end - trials.start) as usize);
    let mut next = trials.start;
    if decomp_bound.is_none() {
        while next + LANES as u64 <= trials.end {
            let seeds = std::array::from_fn(|l| seed(next + l as u64));
            out.extend(simulate_lanes(params, lengths, &config.checkpoints, seeds));
            next += LANES as u64;
        }
    }
    for t in next..trials.end {
        out.push(simulate_trial(params, lengths, &config.checkpoints, seed(t), decomp_bound));
    }
    out
}

fn run_chunks<W: StepLength + Sync>(
    config: &EnsembleConfig,
    lengths: &W,
    decomp_bound: Option<f64>,
) -> Vec<ChunkResult> {
    let chunks = config.trials.div_ceil(CHUNK_TRIALS);
    (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let first = chunk * CHUNK_TRIALS;
            let last = (first + CHUNK_TRIALS).min(config.trials);
            let mut summaries: Vec<_> = config
                .checkpoints
                .iter()
                .map(|&n| CheckpointSummary::empty(n, decomp_bound))
                .collect();
            let mut records = Vec::new();
            let paths = chunk_snapshots(config, lengths, decomp_bound, first..last);
            for (trial, snaps) in (first..last).zip(paths) {
                for (acc, snap) in summaries.iter_mut().zip(&snaps) {
                    acc.push(snap);
                }
                if config.observables.per_trial {
                    records.push(TrialRecord {
                        trial,
                        snapshots: snaps,
                    });
                }
            }
            ChunkResult { summaries, records }
        })
        .collect()
}

/// Runs `config.trials` independent paths and summarises them per checkpoint.
///
/// Uses the current rayon pool; the result does not depend on its size.
pub fn run_ensemble(config: &EnsembleConfig) -> Result<EnsembleResult, McError> {
    config.validate()?;
    let params = config.params;
    let decomp_bound = config
        .observables
        .decomposition
        .then(|| remainder_bound(&params));
    let chunk_results = if config.n_max <= MAX_TABLE_LEN {
        run_chunks(config, &StepWeights::new(&params, config.n_max), decomp_bound)
    } else {
        run_chunks(config, &params, decomp_bound)
    };

    let mut iter = chunk_results.into_iter();
    let first = iter.next().expect("at least one chunk");
    let mut summaries = first.summaries;
    let mut records = first.records;
    for chunk in iter {
        summaries = summaries
            .iter()
            .zip(&chunk.summaries)
            .map(|(a, b)| a.merge(b))
            .collect();
        records.extend(chunk.records);
    }
    Ok(EnsembleResult {
        config: config.clone(),
        checkpoints: summaries,
        trials: config.observables.per_trial.then_some(records),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::MomentTable;

    fn params(a: f64, b: f64, g: f64) -> ModelParams {
        ModelParams::new(a, b, g).unwrap()
    }

    #[test]
    fn single_trial_matches_its_path() {
        let p = params(0.4, 0.2, 0.6);
        let cfg = EnsembleConfig::new(p, 500, 1, 11)
            .with_checkpoints(&[10, 100, 500])
            .with_observables(Observables {
                decomposition: true,
                per_trial: true,
            });
        let res = run_ensemble(&cfg).unwrap();
        let snaps = &res.trials.as_ref().unwrap()[0].snapshots;
        let direct = simulate_trial(&p, &p, &[10, 100, 500], SeedSpec::new(11, 0), Some(1.0));
        for ((c, s), d) in res.checkpoints.iter().zip(snaps).zip(&direct) {
            assert_eq!(c.t.count, 1);
            assert_eq!(c.t.mean, s.t as f64);
            assert_eq!(c.s.mean, s.s);
            assert_eq!(c.s.variance(), 0.0);
            assert_eq!((s.t, s.s), (d.t, d.s));
        }
    }

    #[test]
    fn lanes_match_single_trials() {
        let p = params(0.6, -0.3, 0.3);
        let table = StepWeights::new(&p, 3000);
        let cps = [7, 300, 3000];
        let seeds = std::array::from_fn(|l| SeedSpec::new(99, 10 + l as u64));
        let lanes = simulate_lanes(&p, &table, &cps, seeds);
        for (l, got) in lanes.iter().enumerate() {
            assert_eq!(got, &simulate_trial(&p, &p, &cps, seeds[l], None));
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let p = params(0.0, 0.0, 0.5);
        let bad = |cfg: EnsembleConfig| run_ensemble(&cfg).unwrap_err();
        assert!(matches!(
            bad(EnsembleConfig::new(p, 10, 0, 1)),
            McError::InvalidConfig(_)
        ));
        assert!(matches!(
            bad(EnsembleConfig::new(p, 10, 1, 1).with_checkpoints(&[5, 20])),
            McError::InvalidConfig(_)
        ));
        assert!(matches!(
            bad(EnsembleConfig::new(p, 10, 1, 1).with_checkpoints(&[5, 5])),
            McError::InvalidConfig(_)
        ));
        let mut cfg = EnsembleConfig::new(p, 10, 100, 1).with_checkpoints(&[2, 4, 6]);
        cfg.record_budget = 299;
        assert_eq!(
            bad(cfg),
            McError::ResourceLimit {
                needed: 300,
                budget: 299
            }
        );
    }

    #[test]
    fn independent_of_thread_count() {
        let p = params(0.3, 0.1, 0.4);
        let cfg = EnsembleConfig::new(p, 2000, 300, 5).with_checkpoints(&[100, 2000]);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_ensemble(&cfg).unwrap())
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn symmetric_walk_mean_is_zero() {
        let p = params(0.0, 0.0, 1e-9);
        let cps = [100, 1000, 10_000];
        let res = run_ensemble(&EnsembleConfig::new(p, 10_000, 2000, 3).with_checkpoints(&cps)).unwrap();
        for c in &res.checkpoints {
            assert!(c.t.mean.abs() <= 4.0 * c.t.std_error(), "{c:?}");
        }
    }

    #[test]
    fn sign_changes_counted_strictly() {
        let mut sc = SignChanges::default();
        let at = |n, s| WalkState { n, t: 0, h: 0, s };
        sc.observe(&at(0, 0.0), Step::Plus, 1.0, &at(1, 1.0));
        sc.observe(&at(1, 1.0), Step::Minus, 1.0, &at(2, 0.0));
        sc.observe(&at(2, 0.0), Step::Minus, 1.0, &at(3, -1.0));
        assert_eq!(sc.count, 0);
        sc.observe(&at(3, -1.0), Step::Plus, 2.0, &at(4, 1.0));
        assert_eq!(sc, SignChanges { count: 1, last: 4 });
    }

    #[test]
    fn decomposition_bound_holds_in_ensemble() {
        let p = params(0.7, -0.4, 0.35);
        let cfg = EnsembleConfig::new(p, 5000, 100, 9).with_observables(Observables {
            decomposition: true,
            per_trial: false,
        });
        let d = run_ensemble(&cfg).unwrap().last().decomp.unwrap();
        assert_eq!(d.violations, 0);
        assert!(d.max_abs_r <= d.bound);
        assert!(d.max_resid22_gap < 1e-9);
        assert_eq!(d.m.count, 100);
    }

    #[test]
    fn variance_of_t_matches_exact() {
        let p = params(0.2, 0.0, 0.5);
        let n = 1000;
        let res = run_ensemble(&EnsembleConfig::new(p, n, 20_000, 17)).unwrap();
        let exact = MomentTable::compute(&p, &[n]).rows[0];
        let t = res.last().t;
        assert!((t.variance() - exact.var_t()).abs() <= 4.0 * t.variance_std_error());
        let s = res.last().s;
        assert!((s.mean - exact.mean_s).abs() <= 4.0 * s.std_error());
        assert!((s.variance() - exact.var_s()).abs() <= 4.0 * s.variance_std_error());
    }
}
