//! Small shared helpers: stable hashing for reproducible seed derivation.

/// FNV-1a over a byte slice. Stable across platforms and releases, which is
/// what makes seed derivation reproducible (std's `DefaultHasher` is not).
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Derive a child seed from a base seed and a string salt (e.g. a subject id).
/// The result depends only on the inputs, never on iteration order.
pub fn derive_seed(base: u64, salt: &str) -> u64 {
    let mut buf = Vec::with_capacity(8 + salt.len());
    buf.extend_from_slice(&base.to_le_bytes());
    buf.extend_from_slice(salt.as_bytes());
    fnv1a(&buf)
}

/// Derive a child seed from a base seed and an index (e.g. a channel number).
pub fn derive_seed_indexed(base: u64, index: u64) -> u64 {
    let mut buf = [0u8; 16];
    buf[..8].copy_from_slice(&base.to_le_bytes());
    buf[8..].copy_from_slice(&index.to_le_bytes());
    fnv1a(&buf)
}
