//! Deterministic stream derivation.
//!
//! Every stochastic component draws from a ChaCha20 stream derived from the
//! user-facing seed and a tag path (for example `[PROPAGATE, iteration, slot]`).
//! Streams with distinct tag paths are independent for all practical purposes,
//! and a given path always yields the same stream regardless of what other
//! parts of the program have sampled. This is what makes reruns byte-identical
//! even when work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// splitmix64 finalizer. Good avalanche behaviour; used only for key
/// derivation, never as a generator.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Fold a tag into a running hash.
#[inline]
pub fn mix(seed: u64, tag: u64) -> u64 {
    splitmix64(seed ^ splitmix64(tag))
}

/// Stable 64-bit tag from a byte-string name (FNV-1a); lets call sites write
/// `substream(seed, &[tag(b"resample"), iter])` without a constants registry.
pub const fn tag(name: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    let mut i = 0;
    while i < name.len() {
        h ^= name[i] as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
        i += 1;
    }
    h
}

/// Derive an independent generator from a master seed and a tag path.
pub fn substream(master: u64, tags: &[u64]) -> ChaCha20Rng {
    let mut h = splitmix64(master);
    for &t in tags {
        h = mix(h, t);
    }
    let mut key = [0u8; 32];
    let mut s = h;
    for chunk in key.chunks_exact_mut(8) {
        s = splitmix64(s);
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    ChaCha20Rng::from_seed(key)
}
