//! Named, reproducible random streams.
//!
//! Every source of randomness in a run is a child of one master seed. A child
//! is addressed by a path such as `graph`, `losses` or `noise/s/3/7/2`; its
//! seed is a fixed mix of the master seed and the path bytes, so streams never
//! interleave and changing one stream's seed leaves the others untouched.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of the child stream `name` under `master`.
pub fn child_seed(master: u64, name: &str) -> u64 {
    let mut h = splitmix64(master ^ 0x636F_6F6C_636E_0001);
    for chunk in name.as_bytes().chunks(8) {
        let mut word = [0u8; 8];
        word[..chunk.len()].copy_from_slice(chunk);
        h = splitmix64(h ^ u64::from_le_bytes(word));
    }
    splitmix64(h ^ name.len() as u64)
}

/// Seed derived from a master seed and a tuple of integer keys.
pub fn keyed_seed(master: u64, keys: &[u64]) -> u64 {
    let mut h = splitmix64(master ^ 0x6B65_7965_6400_0002);
    for &k in keys {
        h = splitmix64(h ^ k);
    }
    h
}

pub fn stream(master: u64, name: &str) -> StreamRng {
    StreamRng::seed_from_u64(child_seed(master, name))
}

pub fn seeded(seed: u64) -> StreamRng {
    StreamRng::seed_from_u64(seed)
}
