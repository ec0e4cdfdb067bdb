// SPDX-License-Identifier: Apache-2.0

//! Shared scalar types: the 256-bit machine word, 160-bit account
//! addresses, and 32-byte digests.
//!
//! All VM arithmetic wraps modulo 2^256; division and modulo are Euclidean
//! on the unsigned domain with a zero divisor signalled to the caller.

use std::fmt;
use std::str::FromStr;

use primitive_types::U256;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Unsigned 256-bit machine word. Add/sub/mul wrap modulo 2^256.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Word256(pub U256);

impl Word256 {
    pub const ZERO: Word256 = Word256(U256::zero());
    pub const ONE: Word256 = Word256(U256::one());

    pub const MAX: Word256 = Word256(U256::MAX);

    pub fn from_u64(v: u64) -> Word256 {
        Word256(U256::from(v))
    }

    pub fn from_u128(v: u128) -> Word256 {
        Word256(U256::from(v))
    }

    /// 2^exp, wrapping for exp >= 256 (so `2**256` folds to 0, matching the
    /// modular arithmetic of every other operator).
    pub fn pow2(exp: u32) -> Word256 {
        if exp >= 256 {
            Word256::ZERO
        } else {
            Word256(U256::one() << exp)
        }
    }

    pub fn wrapping_add(self, rhs: Word256) -> Word256 {
        Word256(self.0.overflowing_add(rhs.0).0)
    }

    pub fn wrapping_sub(self, rhs: Word256) -> Word256 {
        Word256(self.0.overflowing_sub(rhs.0).0)
    }

    pub fn wrapping_mul(self, rhs: Word256) -> Word256 {
        Word256(self.0.overflowing_mul(rhs.0).0)
    }

    /// Base^exp with wrapping multiplication, used only for folding `**`
    /// literals at parse time.
    pub fn wrapping_pow(self, exp: Word256) -> Word256 {
        let mut result = Word256::ONE;
        let mut base = self;
        let mut e = exp.0;
        while !e.is_zero() {
            if e.bit(0) {
                result = result.wrapping_mul(base);
            }
            base = base.wrapping_mul(base);
            e >>= 1;
        }
        result
    }

    /// Euclidean quotient; `None` on a zero divisor.
    pub fn checked_div(self, rhs: Word256) -> Option<Word256> {
        self.0.checked_div(rhs.0).map(Word256)
    }

    /// Euclidean remainder; `None` on a zero divisor.
    pub fn checked_rem(self, rhs: Word256) -> Option<Word256> {
        self.0.checked_rem(rhs.0).map(Word256)
    }

    pub fn is_zero(self) -> bool {
        self.0.is_zero()
    }

    /// Parse a decimal or 0x-prefixed hexadecimal literal.
    pub fn parse(text: &str) -> Option<Word256> {
        if let Some(hexpart) = text.strip_prefix("0x").or_else(|| text.strip_prefix("0X")) {
            U256::from_str_radix(hexpart, 16).ok().map(Word256)
        } else {
            U256::from_dec_str(text).ok().map(Word256)
        }
    }

    /// Truncate to the low 160 bits, yielding an account address.
    pub fn to_address(self) -> Address {
        let be = self.0.to_big_endian();
        let mut addr = [0u8; 20];
        addr.copy_from_slice(&be[12..]);
        Address(addr)
    }

    /// True iff the value is representable as an address (< 2^160).
    pub fn fits_address(self) -> bool {
        self.0 < (U256::one() << 160)
    }
}

impl fmt::Display for Word256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Debug for Word256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for Word256 {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Word256::parse(s).ok_or_else(|| format!("invalid 256-bit literal: {s}"))
    }
}

impl Serialize for Word256 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Word256 {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Word256::parse(&text).ok_or_else(|| D::Error::custom(format!("bad word: {text}")))
    }
}

/// 160-bit account address, printed as 0x + 40 lowercase hex digits.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Address(pub [u8; 20]);

impl Address {
    /// Deterministic address for the n-th allocated account.
    pub fn from_counter(n: u64) -> Address {
        let mut bytes = [0u8; 20];
        bytes[12..].copy_from_slice(&n.to_be_bytes());
        Address(bytes)
    }

    /// Zero-extend to a 256-bit word.
    pub fn to_word(self) -> Word256 {
        let mut be = [0u8; 32];
        be[12..].copy_from_slice(&self.0);
        Word256(U256::from_big_endian(&be))
    }

    pub fn parse(text: &str) -> Option<Address> {
        let hexpart = text.strip_prefix("0x")?;
        if hexpart.len() != 40 {
            return None;
        }
        let raw = hex::decode(hexpart).ok()?;
        let mut bytes = [0u8; 20];
        bytes.copy_from_slice(&raw);
        Some(Address(bytes))
    }

    /// Inverse of [`Address::from_counter`]: the counter value if this
    /// address has the counter shape (12 leading zero bytes), else `None`.
    pub fn counter(self) -> Option<u64> {
        if self.0[..12].iter().all(|b| *b == 0) {
            let mut be = [0u8; 8];
            be.copy_from_slice(&self.0[12..]);
            Some(u64::from_be_bytes(be))
        } else {
            None
        }
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{}", hex::encode(self.0))
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl Serialize for Address {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Address {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Address::parse(&text).ok_or_else(|| D::Error::custom(format!("bad address: {text}")))
    }
}

/// 32-byte SHA-256 digest, printed as 0x + 64 lowercase hex digits.
/// Used for contract code hashes, path hashes, and theorem ids.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Digest(pub [u8; 32]);

impl Digest {
    pub fn of(bytes: &[u8]) -> Digest {
        use sha2::{Digest as _, Sha256};
        let mut hasher = Sha256::new();
        hasher.update(bytes);
        Digest(hasher.finalize().into())
    }

    pub fn parse(text: &str) -> Option<Digest> {
        let hexpart = text.strip_prefix("0x")?;
        if hexpart.len() != 64 {
            return None;
        }
        let raw = hex::decode(hexpart).ok()?;
        let mut bytes = [0u8; 32];
        bytes.copy_from_slice(&raw);
        Some(Digest(bytes))
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{}", hex::encode(self.0))
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl Serialize for Digest {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Digest {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Digest::parse(&text).ok_or_else(|| D::Error::custom(format!("bad digest: {text}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(v: u64) -> Word256 {
        Word256::from_u64(v)
    }

    #[test]
    fn overflow_add_wraps_to_one() {
        // 2^255 + (2^255 + 1) = 2^256 + 1 = 1 (mod 2^256)
        let fee = Word256::pow2(255);
        let value = Word256::pow2(255).wrapping_add(Word256::ONE);
        assert_eq!(fee.wrapping_add(value), Word256::ONE);
    }

    #[test]
    fn sub_wraps_below_zero() {
        assert_eq!(Word256::ZERO.wrapping_sub(Word256::ONE), Word256::MAX);
    }

    #[test]
    fn euclidean_division() {
        assert_eq!(w(7).checked_div(w(2)), Some(w(3)));
        assert_eq!(w(7).checked_rem(w(2)), Some(w(1)));
        assert_eq!(w(7).checked_div(Word256::ZERO), None);
        assert_eq!(w(7).checked_rem(Word256::ZERO), None);
    }

    #[test]
    fn pow_literal_folding() {
        assert_eq!(w(2).wrapping_pow(w(255)), Word256::pow2(255));
        assert_eq!(w(2).wrapping_pow(w(256)), Word256::ZERO);
        assert_eq!(w(3).wrapping_pow(w(4)), w(81));
        assert_eq!(w(10).wrapping_pow(w(0)), w(1));
    }

    #[test]
    fn parse_and_display_round_trip() {
        let v = Word256::parse("115792089237316195423570985008687907853269984665640564039457584007913129639935").unwrap();
        assert_eq!(v, Word256::MAX);
        assert_eq!(Word256::parse(&v.to_string()), Some(v));
        assert_eq!(Word256::parse("0xff"), Some(w(255)));
        assert_eq!(Word256::parse("abc"), None);
    }

    #[test]
    fn address_round_trip() {
        let a = Address::from_counter(7);
        let text = a.to_string();
        assert_eq!(text.len(), 42);
        assert_eq!(Address::parse(&text), Some(a));
        assert_eq!(a.to_word().to_address(), a);
        assert!(a.to_word().fits_address());
    }

    #[test]
    fn digest_display_shape() {
        let d = Digest::of(b"abc");
        let text = d.to_string();
        assert!(text.starts_with("0x"));
        assert_eq!(text.len(), 66);
        assert_eq!(Digest::parse(&text), Some(d));
        // SHA-256("abc") is a published test vector.
        assert_eq!(
            text,
            "0xba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn word_serde_is_decimal_string() {
        let v = w(1000);
        assert_eq!(serde_json::to_string(&v).unwrap(), "\"1000\"");
        let back: Word256 = serde_json::from_str("\"1000\"").unwrap();
        assert_eq!(back, v);
    }
}
