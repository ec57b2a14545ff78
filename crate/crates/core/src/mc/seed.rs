const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 output function, a bijection on `u64`.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of trial `index` under `master`:
/// `mix64(mix64(master + GAMMA) ^ index)` with the SplitMix64 output
/// function `mix64` and its increment `GAMMA = 0x9e3779b97f4a7c15`.
///
/// For a fixed master this is a composition of bijections of the index, so
/// distinct indices never share a seed.
pub fn derive_trial_seed(master: u64, index: u64) -> u64 {
    mix64(mix64(master.wrapping_add(GAMMA)) ^ index)
}
