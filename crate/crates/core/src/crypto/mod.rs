//! The five algorithm families the blocks expose.
//!
//! These are teaching primitives: AES runs in ECB mode and RSA is textbook
//! (unpadded). Both are intentional and must not be used to protect real data.

pub mod aes;
pub mod caesar;
pub mod digest;
pub mod rsa;

pub use self::aes::{aes_ecb_decrypt, aes_ecb_encrypt, derive_aes_key, AesKey128};
pub use self::caesar::{caesar_shift, Direction};
pub use self::digest::{crc32_hex, sha256_hex, Digest, DigestAlgorithm};
pub use self::rsa::{rsa_apply, rsa_unapply, KeyRole, Payload, RsaKey, RsaKeypair};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CryptoError {
    #[error("passphrase must not be empty")]
    EmptyPassphrase,
    #[error("malformed ciphertext: {0}")]
    MalformedCiphertext(String),
    #[error("padding check failed (wrong key or corrupted ciphertext)")]
    PaddingError,
    #[error("decrypted bytes are not valid UTF-8 text")]
    InvalidUtf8,
    #[error("unsupported RSA key size {0} (expected 512, 1024 or 2048)")]
    UnsupportedKeySize(u64),
    #[error("RSA modulus is too small to carry framed chunks")]
    KeyTooSmall,
    #[error("RSA block does not decode to a valid chunk (wrong key?)")]
    ChunkOutOfRange,
    #[error("RSA payload kind header is invalid")]
    KindHeaderInvalid,
    #[error("RSA message must not be empty")]
    EmptyMessage,
    #[error("invalid RSA key: {0}")]
    InvalidKey(String),
}
