use sha2::{Digest as _, Sha256};

use crate::value::HexBytes;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DigestAlgorithm {
    Sha256,
    Crc32,
}

impl DigestAlgorithm {
    pub fn hex_len(self) -> usize {
        match self {
            DigestAlgorithm::Sha256 => 64,
            DigestAlgorithm::Crc32 => 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Digest {
    pub algorithm: DigestAlgorithm,
    pub hex: HexBytes,
}

pub fn sha256_hex(input: &str) -> Digest {
    let out = Sha256::digest(input.as_bytes());
    Digest {
        algorithm: DigestAlgorithm::Sha256,
        hex: HexBytes::from_bytes(&out),
    }
}

/// CRC-32/ISO-HDLC: reflected polynomial 0x04C11DB7, init and final XOR
/// 0xFFFFFFFF. Rendered big-endian, so "123456789" gives `cbf43926`.
pub fn crc32_hex(input: &str) -> Digest {
    let crc = crc32fast::hash(input.as_bytes());
    Digest {
        algorithm: DigestAlgorithm::Crc32,
        hex: HexBytes::from_bytes(&crc.to_be_bytes()),
    }
}
