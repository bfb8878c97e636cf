//! Textbook RSA over framed chunks.
//!
//! Either key half can be applied, which is what lets a program express
//! both `{M}_B` (apply B's public key) and `[M]_A` (apply A's private key).
//!
//! Wire layout: the message bytes are prefixed with a one-byte kind header
//! (`0x01` text, `0x02` hex bytes), split into chunks of at most `k - 2`
//! bytes (`k` = modulus length in bytes), and each chunk is prefixed with
//! its length. The resulting integer is below `256^(k-1) <= n`, is raised to
//! the key's exponent, and is written as a fixed-width `k`-byte block.

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};

use super::CryptoError;
use crate::value::HexBytes;

pub const DEFAULT_KEY_BITS: u64 = 1024;
pub const PUBLIC_EXPONENT: u32 = 65537;
const MILLER_RABIN_ROUNDS: usize = 40;

const KIND_TEXT: u8 = 0x01;
const KIND_HEX: u8 = 0x02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum KeyRole {
    Public,
    Private,
}

impl KeyRole {
    pub fn complement(self) -> Self {
        match self {
            KeyRole::Public => KeyRole::Private,
            KeyRole::Private => KeyRole::Public,
        }
    }
}

impl std::fmt::Display for KeyRole {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            KeyRole::Public => "PUBLIC",
            KeyRole::Private => "PRIVATE",
        })
    }
}

/// One half of a keypair, tagged with where it came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "KeyExport", into = "KeyExport")]
pub struct RsaKey {
    pub modulus: BigUint,
    pub exponent: BigUint,
    pub role: KeyRole,
    pub owner: String,
    pub key_id: String,
}

/// Export document: `{"owner", "key_id", "role", "n": hex, "exp": hex}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeyExport {
    pub owner: String,
    pub key_id: String,
    pub role: KeyRole,
    pub n: String,
    pub exp: String,
}

impl From<RsaKey> for KeyExport {
    fn from(k: RsaKey) -> Self {
        KeyExport {
            owner: k.owner,
            key_id: k.key_id,
            role: k.role,
            n: k.modulus.to_str_radix(16),
            exp: k.exponent.to_str_radix(16),
        }
    }
}

impl TryFrom<KeyExport> for RsaKey {
    type Error = CryptoError;

    fn try_from(e: KeyExport) -> Result<Self, Self::Error> {
        let parse = |field: &str, s: &str| {
            BigUint::parse_bytes(s.as_bytes(), 16)
                .ok_or_else(|| CryptoError::InvalidKey(format!("{field} is not hex")))
        };
        let modulus = parse("n", &e.n)?;
        let exponent = parse("exp", &e.exp)?;
        if modulus <= BigUint::one() || exponent.is_zero() || exponent >= modulus {
            return Err(CryptoError::InvalidKey(
                "exponent/modulus out of range".into(),
            ));
        }
        Ok(RsaKey {
            modulus,
            exponent,
            role: e.role,
            owner: e.owner,
            key_id: e.key_id,
        })
    }
}

impl RsaKey {
    pub fn modulus_bytes(&self) -> usize {
        self.modulus.bits().div_ceil(8) as usize
    }

    /// Raw modular exponentiation with this half's exponent.
    pub fn transform(&self, m: &BigUint) -> BigUint {
        m.modpow(&self.exponent, &self.modulus)
    }

    /// Compact JSON export, also used when a key is coerced to text.
    pub fn export_text(&self) -> String {
        serde_json::to_string(&KeyExport::from(self.clone())).expect("key export serializes")
    }

    /// Whether `other` is the complementary half of the same keypair.
    pub fn pairs_with(&self, other: &RsaKey) -> bool {
        self.key_id == other.key_id && self.modulus == other.modulus && self.role != other.role
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RsaKeypair {
    pub modulus: BigUint,
    pub public_exponent: BigUint,
    pub private_exponent: BigUint,
    pub owner: String,
    pub key_id: String,
}

impl RsaKeypair {
    /// Generates a keypair whose modulus has exactly `bits` bits.
    pub fn generate<R: RngCore>(bits: u64, owner: &str, rng: &mut R) -> Result<Self, CryptoError> {
        if !matches!(bits, 512 | 1024 | 2048) {
            return Err(CryptoError::UnsupportedKeySize(bits));
        }
        let e = BigUint::from(PUBLIC_EXPONENT);
        loop {
            let p = random_prime(bits / 2, rng);
            let q = random_prime(bits / 2, rng);
            if p == q {
                continue;
            }
            let one = BigUint::one();
            let lambda = (&p - &one).lcm(&(&q - &one));
            let Some(d) = e.modinv(&lambda) else {
                continue;
            };
            let n = &p * &q;
            debug_assert_eq!(n.bits(), bits);
            return Ok(Self::assemble(n, e, d, owner));
        }
    }

    pub fn generate_seeded(bits: u64, owner: &str, seed: u64) -> Result<Self, CryptoError> {
        Self::generate(bits, owner, &mut ChaCha20Rng::seed_from_u64(seed))
    }

    /// Builds a keypair from known parameters after checking that the two
    /// exponents invert each other. Small moduli (up to 2^20) are checked
    /// for every residue; larger ones against a fixed probe set.
    pub fn from_parts(
        n: BigUint,
        e: BigUint,
        d: BigUint,
        owner: &str,
    ) -> Result<Self, CryptoError> {
        if n <= BigUint::from(2u32) || e.is_zero() || d.is_zero() || e >= n || d >= n {
            return Err(CryptoError::InvalidKey("parameters out of range".into()));
        }
        let round_trips = |m: &BigUint| m.modpow(&e, &n).modpow(&d, &n) == *m;
        let ok = if n.bits() <= 20 {
            let limit: u64 = n.clone().try_into().expect("small modulus");
            (0..limit).all(|m| round_trips(&BigUint::from(m)))
        } else {
            (2u32..66).all(|m| round_trips(&BigUint::from(m)))
        };
        if !ok {
            return Err(CryptoError::InvalidKey(
                "exponents do not invert each other".into(),
            ));
        }
        Ok(Self::assemble(n, e, d, owner))
    }

    fn assemble(n: BigUint, e: BigUint, d: BigUint, owner: &str) -> Self {
        let key_id = key_id_for(&n);
        RsaKeypair {
            modulus: n,
            public_exponent: e,
            private_exponent: d,
            owner: owner.to_owned(),
            key_id,
        }
    }

    pub fn public_key(&self) -> RsaKey {
        self.half(KeyRole::Public)
    }

    pub fn private_key(&self) -> RsaKey {
        self.half(KeyRole::Private)
    }

    fn half(&self, role: KeyRole) -> RsaKey {
        RsaKey {
            modulus: self.modulus.clone(),
            exponent: match role {
                KeyRole::Public => self.public_exponent.clone(),
                KeyRole::Private => self.private_exponent.clone(),
            },
            role,
            owner: self.owner.clone(),
            key_id: self.key_id.clone(),
        }
    }
}

fn key_id_for(n: &BigUint) -> String {
    let digest = Sha256::digest(n.to_bytes_be());
    format!("k{}", hex::encode(&digest[..8]))
}

const SMALL_PRIMES: [u32; 53] = [
    3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
    101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191, 193,
    197, 199, 211, 223, 227, 229, 233, 239, 241, 251,
];

/// Draws candidates with the top two bits set (so a product of two has the
/// full bit length) until one passes trial division and Miller-Rabin.
fn random_prime<R: RngCore>(bits: u64, rng: &mut R) -> BigUint {
    loop {
        let mut candidate = rng.gen_biguint(bits);
        candidate.set_bit(bits - 1, true);
        candidate.set_bit(bits - 2, true);
        candidate.set_bit(0, true);
        if SMALL_PRIMES
            .iter()
            .any(|&p| (&candidate % p).is_zero() && candidate != BigUint::from(p))
        {
            continue;
        }
        if is_probable_prime(&candidate, MILLER_RABIN_ROUNDS, rng) {
            return candidate;
        }
    }
}

pub fn is_probable_prime<R: RngCore>(n: &BigUint, rounds: usize, rng: &mut R) -> bool {
    let one = BigUint::one();
    let two = BigUint::from(2u32);
    if *n < two {
        return false;
    }
    if *n == two || *n == BigUint::from(3u32) {
        return true;
    }
    if n.is_even() {
        return false;
    }
    let n_minus_one = n - &one;
    let s = n_minus_one.trailing_zeros().expect("n - 1 > 0");
    let d = &n_minus_one >> s;
    'witness: for _ in 0..rounds {
        let a = rng.gen_biguint_range(&two, &n_minus_one);
        let mut x = a.modpow(&d, n);
        if x == one || x == n_minus_one {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n_minus_one {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Message content carried through RSA; the kind survives the round trip.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload {
    Text(String),
    Hex(HexBytes),
}

fn chunk_capacity(key: &RsaKey) -> Result<(usize, usize), CryptoError> {
    let k = key.modulus_bytes();
    if k < 3 {
        return Err(CryptoError::KeyTooSmall);
    }
    Ok((k, (k - 2).min(u8::MAX as usize)))
}

/// Number of RSA blocks [`rsa_apply`] will produce for `payload`.
pub fn chunk_count(payload_len: usize, key: &RsaKey) -> Result<usize, CryptoError> {
    let (_, cap) = chunk_capacity(key)?;
    Ok((payload_len + 1).div_ceil(cap))
}

pub fn rsa_apply(message: &Payload, key: &RsaKey) -> Result<HexBytes, CryptoError> {
    let (k, cap) = chunk_capacity(key)?;
    let stream = match message {
        Payload::Text(s) => {
            let mut v = vec![KIND_TEXT];
            v.extend_from_slice(s.as_bytes());
            v
        }
        Payload::Hex(h) => {
            let mut v = vec![KIND_HEX];
            v.extend(h.to_bytes());
            v
        }
    };
    if stream.len() == 1 {
        return Err(CryptoError::EmptyMessage);
    }

    let mut out = Vec::with_capacity(k * stream.len().div_ceil(cap));
    for chunk in stream.chunks(cap) {
        let mut framed = Vec::with_capacity(chunk.len() + 1);
        framed.push(chunk.len() as u8);
        framed.extend_from_slice(chunk);
        let c = key.transform(&BigUint::from_bytes_be(&framed));
        write_fixed(&mut out, &c, k);
    }
    Ok(HexBytes::from_bytes(&out))
}

pub fn rsa_unapply(ciphertext: &HexBytes, key: &RsaKey) -> Result<Payload, CryptoError> {
    let (k, cap) = chunk_capacity(key)?;
    let bytes = ciphertext.to_bytes();
    if bytes.is_empty() || !bytes.len().is_multiple_of(k) {
        return Err(CryptoError::MalformedCiphertext(format!(
            "length {} bytes is not a positive multiple of the {k}-byte block size",
            bytes.len()
        )));
    }
    let mut stream = Vec::with_capacity(bytes.len());
    for block in bytes.chunks_exact(k) {
        let c = BigUint::from_bytes_be(block);
        if c >= key.modulus {
            return Err(CryptoError::ChunkOutOfRange);
        }
        let framed = key.transform(&c).to_bytes_be();
        let len = framed[0] as usize;
        if len == 0 || len > cap || framed.len() != len + 1 {
            return Err(CryptoError::ChunkOutOfRange);
        }
        stream.extend_from_slice(&framed[1..]);
    }
    match stream.split_first() {
        Some((&KIND_TEXT, rest)) => String::from_utf8(rest.to_vec())
            .map(Payload::Text)
            .map_err(|_| CryptoError::InvalidUtf8),
        Some((&KIND_HEX, rest)) => Ok(Payload::Hex(HexBytes::from_bytes(rest))),
        _ => Err(CryptoError::KindHeaderInvalid),
    }
}

fn write_fixed(out: &mut Vec<u8>, value: &BigUint, width: usize) {
    let bytes = value.to_bytes_be();
    out.extend(std::iter::repeat_n(0u8, width - bytes.len()));
    out.extend_from_slice(&bytes);
}
