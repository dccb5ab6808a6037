//! Named, indexed random streams.
//!
//! Every random quantity is drawn from `substream(seed, label, index)`, so a
//! dataset is a pure function of its seed regardless of thread count or
//! evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Mixes a text label into a 64-bit seed (FNV-1a over the label, then a
/// SplitMix64 finalizer).
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = seed ^ h;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn substream(seed: u64, label: &str, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, label));
    rng.set_stream(index);
    rng
}
