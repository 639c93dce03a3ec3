//! Seeded random streams.
//!
//! Every consumer of randomness gets its own ChaCha stream keyed by a 64-bit
//! seed and a stream id, so results are reproducible and independent of
//! scheduling when replicates run on several threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream id used by MCMC chains.
pub const CHAIN_STREAM: u64 = 0;
/// Stream id used for importance-sampling draws from a fitted proposal.
pub const PROPOSAL_STREAM: u64 = 1;
/// Stream id used by plain Monte Carlo screens.
pub const PILOT_STREAM: u64 = 2;
/// First stream id used by the multilevel iterations.
pub const MULTILEVEL_STREAM: u64 = 16;

pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finalizer; maps (master seed, index) to a well-mixed child seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
