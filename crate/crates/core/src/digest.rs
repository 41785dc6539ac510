//! Content digests for run artifacts.
//!
//! Digests are SHA-256 over an explicit byte encoding, rendered as lowercase
//! hex. Floats are hashed via their little-endian IEEE-754 bit patterns, so
//! two artifacts digest equal exactly when they are bit-identical — the
//! property the transfer pipeline relies on to attest that frozen layers were
//! not touched.

use sha2::{Digest, Sha256};

pub struct Hasher(Sha256);

impl Hasher {
    pub fn new() -> Self {
        Hasher(Sha256::new())
    }

    pub fn bytes(&mut self, data: &[u8]) -> &mut Self {
        self.0.update(data);
        self
    }

    pub fn str(&mut self, s: &str) -> &mut Self {
        // Length-prefix so ("ab","c") and ("a","bc") hash differently.
        self.0.update((s.len() as u64).to_le_bytes());
        self.0.update(s.as_bytes());
        self
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.0.update(v.to_le_bytes());
        self
    }

    pub fn f64(&mut self, v: f64) -> &mut Self {
        self.0.update(v.to_bits().to_le_bytes());
        self
    }

    pub fn f64s(&mut self, vs: &[f64]) -> &mut Self {
        for &v in vs {
            self.0.update(v.to_bits().to_le_bytes());
        }
        self
    }

    pub fn finish(self) -> String {
        hex::encode(self.0.finalize())
    }
}

impl Default for Hasher {
    fn default() -> Self {
        Self::new()
    }
}

/// Digest of a whole file's raw bytes.
pub fn file_digest(path: &std::path::Path) -> crate::Result<String> {
    let data = std::fs::read(path).map_err(|e| crate::Error::io(path, e))?;
    let mut h = Hasher::new();
    h.bytes(&data);
    Ok(h.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_vector() {
        // SHA-256 of the empty string, then of "abc" — pinned reference values.
        assert_eq!(
            Hasher::new().finish(),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
        let mut h = Hasher::new();
        h.bytes(b"abc");
        assert_eq!(
            h.finish(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn float_hashing_is_bit_exact() {
        let a = {
            let mut h = Hasher::new();
            h.f64(0.1 + 0.2);
            h.finish()
        };
        let b = {
            let mut h = Hasher::new();
            h.f64(0.3);
            h.finish()
        };
        // 0.1 + 0.2 != 0.3 in binary64; the digest must see the difference.
        assert_ne!(a, b);

        let c = {
            let mut h = Hasher::new();
            h.f64(0.1 + 0.2);
            h.finish()
        };
        assert_eq!(a, c);
    }

    #[test]
    fn string_length_prefix_disambiguates() {
        let ab_c = {
            let mut h = Hasher::new();
            h.str("ab").str("c");
            h.finish()
        };
        let a_bc = {
            let mut h = Hasher::new();
            h.str("a").str("bc");
            h.finish()
        };
        assert_ne!(ab_c, a_bc);
    }
}
