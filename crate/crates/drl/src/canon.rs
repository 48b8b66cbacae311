//! Canonical serialization and stable fingerprints.
//!
//! Every serializable value in this crate uses ordered collections, so its
//! JSON encoding is already canonical: equal values encode to equal bytes on
//! every platform. Fingerprints are SHA-256 digests of that encoding and are
//! safe to persist in traces and compare across runs.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Canonical JSON bytes for a value.
pub fn canonical_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    serde_json::to_vec(value).expect("canonical encoding cannot fail")
}

/// Hex SHA-256 of the canonical encoding.
pub fn fingerprint<T: Serialize>(value: &T) -> String {
    let digest = Sha256::digest(canonical_bytes(value));
    let mut out = String::with_capacity(64);
    for byte in digest {
        use std::fmt::Write;
        write!(out, "{byte:02x}").expect("writing to string");
    }
    out
}

/// 128-bit structural fingerprint for in-memory dedup tables.
///
/// Two seeded passes of the standard hasher over the value's ordered
/// collections. Much cheaper than the SHA-based fingerprints but only stable
/// within one build, so never persist it.
pub fn short_fingerprint<T: Hash>(value: &T) -> [u8; 16] {
    let mut out = [0u8; 16];
    let mut first = DefaultHasher::new();
    value.hash(&mut first);
    out[..8].copy_from_slice(&first.finish().to_le_bytes());
    let mut second = DefaultHasher::new();
    second.write_u64(0x9e37_79b9_7f4a_7c15);
    value.hash(&mut second);
    out[8..].copy_from_slice(&second.finish().to_le_bytes());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::initial_configuration;

    #[test]
    fn fingerprint_is_stable_for_equal_values() {
        let a = initial_configuration();
        let b = initial_configuration();
        assert_eq!(fingerprint(&a), fingerprint(&b));
        assert_eq!(fingerprint(&a).len(), 64);
    }

    #[test]
    fn fingerprint_distinguishes_values() {
        let a = initial_configuration();
        let mut b = initial_configuration();
        b.receptionists.insert(b.root_actor());
        assert_ne!(fingerprint(&a), fingerprint(&b));
    }

    #[test]
    fn short_fingerprint_tracks_equality() {
        let a = initial_configuration();
        let b = initial_configuration();
        assert_eq!(short_fingerprint(&a), short_fingerprint(&b));
        let mut c = initial_configuration();
        c.receptionists.insert(c.root_actor());
        assert_ne!(short_fingerprint(&a), short_fingerprint(&c));
    }
}
