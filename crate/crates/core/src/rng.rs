//! Reproducible random streams.
//!
//! Every consumer of randomness asks for a stream keyed by
//! `(run seed, domain, index)`; streams never share state, so results do not
//! depend on the order in which independent work items are processed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream domains. Adding a domain never perturbs existing streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    InitGenerator = 1,
    InitDiscriminator = 2,
    SamplePositive = 3,
    SampleNegative = 4,
    BatchDiscriminator = 5,
    Noise = 6,
    BatchGenerator = 7,
    Split = 8,
    Eval = 9,
    Attack = 10,
    Synthetic = 11,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream for `(seed, domain, index)`.
pub fn stream(seed: u64, domain: Domain, index: u64) -> StreamRng {
    let mut key = [0u8; 32];
    let mut state = splitmix64(seed ^ splitmix64(domain as u64));
    for (n, chunk) in key.chunks_mut(8).enumerate() {
        state = splitmix64(state ^ splitmix64(index.wrapping_add(n as u64)));
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
