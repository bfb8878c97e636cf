use aes::cipher::{generic_array::GenericArray, BlockDecrypt, BlockEncrypt, KeyInit};
use aes::Aes128;
use sha2::{Digest as _, Sha256};

use super::CryptoError;
use crate::value::HexBytes;

const BLOCK: usize = 16;

/// A 128-bit AES key.
#[derive(Clone, PartialEq, Eq)]
pub struct AesKey128([u8; 16]);

impl AesKey128 {
    pub fn as_bytes(&self) -> &[u8; 16] {
        &self.0
    }
}

impl std::fmt::Debug for AesKey128 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "AesKey128({})", hex::encode(self.0))
    }
}

/// First 16 bytes of SHA-256 over the UTF-8 passphrase.
pub fn derive_aes_key(passphrase: &str) -> Result<AesKey128, CryptoError> {
    if passphrase.is_empty() {
        return Err(CryptoError::EmptyPassphrase);
    }
    let digest = Sha256::digest(passphrase.as_bytes());
    let mut key = [0u8; 16];
    key.copy_from_slice(&digest[..16]);
    Ok(AesKey128(key))
}

/// AES-128-ECB with PKCS#7 padding; the ciphertext is returned as hex.
pub fn aes_ecb_encrypt(plaintext: &str, passphrase: &str) -> Result<HexBytes, CryptoError> {
    let key = derive_aes_key(passphrase)?;
    let cipher = Aes128::new(GenericArray::from_slice(key.as_bytes()));

    let mut data = plaintext.as_bytes().to_vec();
    let pad = BLOCK - data.len() % BLOCK;
    data.extend(std::iter::repeat_n(pad as u8, pad));
    for block in data.chunks_exact_mut(BLOCK) {
        cipher.encrypt_block(GenericArray::from_mut_slice(block));
    }
    Ok(HexBytes::from_bytes(&data))
}

pub fn aes_ecb_decrypt(ciphertext: &HexBytes, passphrase: &str) -> Result<String, CryptoError> {
    let key = derive_aes_key(passphrase)?;
    let mut data = ciphertext.to_bytes();
    if data.is_empty() || !data.len().is_multiple_of(BLOCK) {
        return Err(CryptoError::MalformedCiphertext(format!(
            "length {} bytes is not a positive multiple of {BLOCK}",
            data.len()
        )));
    }
    let cipher = Aes128::new(GenericArray::from_slice(key.as_bytes()));
    for block in data.chunks_exact_mut(BLOCK) {
        cipher.decrypt_block(GenericArray::from_mut_slice(block));
    }

    let pad = *data.last().expect("nonempty") as usize;
    if pad == 0 || pad > BLOCK || !data[data.len() - pad..].iter().all(|&b| b as usize == pad) {
        return Err(CryptoError::PaddingError);
    }
    data.truncate(data.len() - pad);
    String::from_utf8(data).map_err(|_| CryptoError::InvalidUtf8)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_passphrase_rejected() {
        assert_eq!(derive_aes_key(""), Err(CryptoError::EmptyPassphrase));
        assert_eq!(aes_ecb_encrypt("x", ""), Err(CryptoError::EmptyPassphrase));
    }

    #[test]
    fn key_is_case_sensitive_and_deterministic() {
        assert_eq!(
            derive_aes_key("secret").unwrap(),
            derive_aes_key("secret").unwrap()
        );
        assert_ne!(
            derive_aes_key("secret").unwrap(),
            derive_aes_key("Secret").unwrap()
        );
    }

    #[test]
    fn empty_plaintext_is_one_padding_block() {
        let ct = aes_ecb_encrypt("", "k").unwrap();
        assert_eq!(ct.as_str().len(), 32);
        assert_eq!(aes_ecb_decrypt(&ct, "k").unwrap(), "");
    }

    #[test]
    fn decrypt_rejects_bad_lengths() {
        let short = HexBytes::parse("00ff").unwrap();
        assert!(matches!(
            aes_ecb_decrypt(&short, "k"),
            Err(CryptoError::MalformedCiphertext(_))
        ));
        let empty = HexBytes::parse("").unwrap();
        assert!(matches!(
            aes_ecb_decrypt(&empty, "k"),
            Err(CryptoError::MalformedCiphertext(_))
        ));
    }

    #[test]
    fn wrong_passphrase_fails() {
        let ct = aes_ecb_encrypt("HELLO", "secret").unwrap();
        let err = aes_ecb_decrypt(&ct, "wrong").unwrap_err();
        assert!(
            matches!(err, CryptoError::PaddingError | CryptoError::InvalidUtf8),
            "{err:?}"
        );
    }
}
