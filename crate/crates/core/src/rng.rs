//! Named, independently seeded random streams.
//!
//! Every consumer of randomness (initial design, noise per worker, acquisition
//! multistart, k-means) derives its own stream from the root seed, a stream
//! name and a few integer coordinates (iteration, worker, ...). Streams never
//! share state, so results do not depend on the order in which they are used.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Seed for the stream `(root, name, coords)`.
pub fn stream_seed(root: u64, name: &str, coords: &[u64]) -> u64 {
    let mut h = splitmix64(root ^ fnv1a(name));
    for &c in coords {
        h = splitmix64(h ^ splitmix64(c.wrapping_add(0x632B_E59B_D9B4_E019)));
    }
    h
}

pub fn stream(root: u64, name: &str, coords: &[u64]) -> StreamRng {
    StreamRng::seed_from_u64(stream_seed(root, name, coords))
}
