//! Named random sub-streams derived from a single seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the seed of sub-stream `stream` at position `index` from a root seed.
///
/// Distinct `(stream, index)` pairs give unrelated seeds, so folds, trials and
/// targets can each own an independent generator regardless of execution order.
pub fn derive_seed(root: u64, stream: &str, index: &[u64]) -> u64 {
    // FNV-1a over the stream name
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in stream.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    let mut s = splitmix64(root ^ splitmix64(h));
    for &i in index {
        s = splitmix64(s ^ splitmix64(i.wrapping_add(0x5851_f42d_4c95_7f2d)));
    }
    s
}

pub fn stream_rng(root: u64, stream: &str, index: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(root, stream, index))
}
