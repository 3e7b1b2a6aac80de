//! Elephant random walk with polynomially decaying steps.
//!
//! The walker takes the steps `X_k ∈ {−1, +1}` of an elephant random walk
//! (memory parameter `α`, first-step bias `β`) but the `k`-th step has length
//! `k^(−γ)`, so its position is `S_n = Σ_{k≤n} X_k k^(−γ)`. The crate provides
//!
//! - [`model`]: parameters, the exact step law, O(1)-state simulation, the
//!   literal memory-resampling simulator and a brute-force path enumerator;
//! - [`exact`]: exact moment recursions, the law of `T_n` and the `E[S_∞]` series;
//! - [`decomposition`]: the pathwise Doob decomposition `S_n = M_n + A_n` with
//!   the bounded remainder `R_n` and the quadratic-variation family;
//! - [`regime`]: the analytical phase map in the `(α, γ)` plane;
//! - [`montecarlo`]: reproducible parallel ensembles with mergeable statistics;
//! - [`verify`]: the verification suite shared by the CLI and the tests.

pub mod decomposition;
pub mod exact;
pub mod model;
pub mod montecarlo;
pub mod regime;
pub mod verify;

pub use model::{Checkpoints, ModelParams, ParamError, Step, WalkState};
