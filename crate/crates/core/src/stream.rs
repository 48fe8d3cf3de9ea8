//! Per-path random streams.
//!
//! Path `i` of a run with master seed `s` starts from
//! `state0 = mix(s ^ (i + 1) * 0x9E3779B97F4A7C15)` (wrapping multiply), where
//! `mix` is the SplitMix64 finalizer. The 256-bit ChaCha8 key is four
//! successive SplitMix64 outputs seeded at `state0`. Brownian increments are
//! drawn from ChaCha stream 0 and jump events from stream 1, so the two
//! drivers never consume each other's randomness.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn mix(mut x: u64) -> u64 {
    x ^= x >> 30;
    x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^= x >> 31;
    x
}

/// Initial 64-bit state for path `index`.
pub fn path_state(master_seed: u64, index: u64) -> u64 {
    mix(master_seed ^ index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA))
}

fn key_from_state(state0: u64) -> [u8; 32] {
    let mut key = [0u8; 32];
    let mut s = state0;
    for chunk in key.chunks_exact_mut(8) {
        s = s.wrapping_add(GOLDEN_GAMMA);
        chunk.copy_from_slice(&mix(s).to_le_bytes());
    }
    key
}

/// The independent random sources owned by one simulated path.
#[derive(Debug, Clone)]
pub struct PathStream {
    pub brownian: ChaCha8Rng,
    pub jumps: ChaCha8Rng,
}

impl PathStream {
    pub fn new(master_seed: u64, index: u64) -> Self {
        let key = key_from_state(path_state(master_seed, index));
        let mut brownian = ChaCha8Rng::from_seed(key);
        brownian.set_stream(0);
        let mut jumps = ChaCha8Rng::from_seed(key);
        jumps.set_stream(1);
        Self { brownian, jumps }
    }
}
