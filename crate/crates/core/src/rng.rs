//! Seeded random streams.
//!
//! Every consumer of randomness (topology construction, each peer, publisher
//! selection) draws from its own ChaCha stream derived from the scenario
//! seed, so the outcome never depends on event interleaving.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream purposes. Each gets a distinct key so streams never overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Topology = 1,
    Peer = 2,
    Publishers = 3,
    MessageIds = 4,
    Heartbeat = 5,
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

pub fn derive(seed: u64, stream: Stream, index: u64) -> SimRng {
    let mut key = [0u8; 32];
    let lanes = [
        splitmix(seed),
        splitmix(seed ^ (stream as u64).rotate_left(17)),
        splitmix(index.wrapping_mul(0xA24B_AED4_963E_E407) ^ stream as u64),
        splitmix(seed.rotate_left(32) ^ index),
    ];
    for (chunk, lane) in key.chunks_exact_mut(8).zip(lanes) {
        chunk.copy_from_slice(&lane.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
