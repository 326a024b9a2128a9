//! Deterministic seed derivation for scenario fan-out.
//!
//! Every seed a scenario uses is derived from the run seed plus a textual
//! scenario key. The hash is hand-rolled (FNV-1a folded through splitmix64)
//! because `DefaultHasher` is not guaranteed stable across Rust releases and
//! store reproducibility depends on these values never changing.

/// splitmix64 step; a good bit mixer for combining seed material.
pub fn mix(state: u64, salt: u64) -> u64 {
    let mut z = state
        .wrapping_add(salt)
        .wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a over a byte string.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Derives a child seed from a parent seed and a scenario key.
pub fn derive(parent: u64, key: &str) -> u64 {
    mix(parent, fnv1a(key.as_bytes()))
}
