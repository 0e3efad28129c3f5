use sha2::{Digest, Sha256};

/// Lowercase hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Short stable identifier fragment: the first `len` hex digits of the digest of `text`.
pub fn short_digest(text: &str, len: usize) -> String {
    let mut h = sha256_hex(text.as_bytes());
    h.truncate(len);
    h
}
