use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

/// Generator used for every simulated path.
pub type PathRng = Xoshiro256PlusPlus;

/// Identifies the random stream of one trial.
///
/// The stream is a pure function of `(master_seed, trial_index)`, so a trial
/// reproduces exactly no matter which worker runs it or in what order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub trial_index: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, trial_index: u64) -> Self {
        Self {
            master_seed,
            trial_index,
        }
    }

    /// 64-bit key derived by hashing both components.
    pub fn stream_key(&self) -> u64 {
        let a = splitmix64(self.master_seed);
        splitmix64(a ^ splitmix64(self.trial_index.wrapping_add(0x6a09_e667_f3bc_c909)))
    }

    pub fn rng(&self) -> PathRng {
        PathRng::seed_from_u64(self.stream_key())
    }
}

/// SplitMix64 finaliser.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
