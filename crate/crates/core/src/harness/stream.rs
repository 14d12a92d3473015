//! Counter-based derivation of per-trial random streams.
//!
//! Parallel trials must not share a sequential RNG: the draw order would
//! then depend on scheduling.  Instead every trial derives its own ChaCha8
//! stream from `(seed, trial_index, purpose_tag)`, so any trial can be
//! replayed in isolation and results are independent of the worker count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer: bijective, avalanching mix of one word.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// Derives the ChaCha8 stream for one `(seed, trial, purpose)` triple.
///
/// The three inputs are folded through the splitmix64 finalizer — the seed
/// and trial index as words, the purpose tag as zero-padded little-endian
/// 8-byte chunks prefixed with its length so distinct tags can never
/// collide by padding — and the mixed state is expanded into the 256-bit
/// stream key.
pub fn derive_stream(seed: u64, trial: u64, purpose: &str) -> ChaCha8Rng {
    let mut state = mix(seed ^ GOLDEN);
    state = mix(state ^ trial.wrapping_mul(GOLDEN));
    state = mix(state ^ (purpose.len() as u64));
    for chunk in purpose.as_bytes().chunks(8) {
        let mut word = [0u8; 8];
        word[..chunk.len()].copy_from_slice(chunk);
        state = mix(state ^ u64::from_le_bytes(word));
    }

    let mut key = [0u8; 32];
    for (i, slot) in key.chunks_exact_mut(8).enumerate() {
        state = state.wrapping_add(GOLDEN.wrapping_mul(i as u64 + 1));
        slot.copy_from_slice(&mix(state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
