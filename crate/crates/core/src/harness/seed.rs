//! Per-trial seed derivation.
//!
//! `seed = mix(mix(mix(mix(master) ^ K) ^ bits(snr_db)) ^ trial_index)` where
//! `mix` is the SplitMix64 output function and `bits` is the IEEE-754 bit
//! pattern. Seeds depend on the point values, not on their position in the
//! config lists, so a trial reproduces under any sweep that contains it.

/// SplitMix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn trial_seed(master_seed: u64, k: usize, snr_db: f64, trial_index: usize) -> u64 {
    // −0.0 and 0.0 name the same point
    let snr_bits = if snr_db == 0.0 { 0 } else { snr_db.to_bits() };
    let mut h = mix64(master_seed);
    h = mix64(h ^ k as u64);
    h = mix64(h ^ snr_bits);
    mix64(h ^ trial_index as u64)
}
