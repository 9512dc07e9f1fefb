//! Counter-based seeding: every (scheme, point, symbol) triple owns an
//! independent ChaCha8 stream, so results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Point index reserved for drive calibration draws.
pub const CALIBRATION_POINT: u64 = u64::MAX;
/// Point index reserved for interleaver search and DC-reduction statistics.
pub const SETUP_POINT: u64 = u64::MAX - 1;

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Stream for symbol `symbol` of point `point` in lane `lane`.
pub fn stream(master_seed: u64, lane: u64, point: u64, symbol: u64) -> ChaCha8Rng {
    let mut state = splitmix64(master_seed);
    for word in [lane, point, symbol] {
        state = splitmix64(state ^ splitmix64(word));
    }
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}
