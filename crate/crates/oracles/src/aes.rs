//! AES-128 from the FIPS-197 description, byte-oriented, with the S-box
//! computed from the field inverse and affine map.

fn xtime(a: u8) -> u8 {
    (a << 1) ^ if a & 0x80 != 0 { 0x1b } else { 0 }
}

fn gmul(mut a: u8, mut b: u8) -> u8 {
    let mut p = 0;
    while b != 0 {
        if b & 1 != 0 {
            p ^= a;
        }
        a = xtime(a);
        b >>= 1;
    }
    p
}

fn ginv(a: u8) -> u8 {
    // a^254 = a^-1 in GF(2^8); 0 maps to 0.
    let mut r = 1u8;
    for _ in 0..254 {
        r = gmul(r, a);
    }
    if a == 0 {
        0
    } else {
        r
    }
}

fn sbox() -> [u8; 256] {
    let mut s = [0u8; 256];
    for (x, slot) in s.iter_mut().enumerate() {
        let b = ginv(x as u8);
        *slot = b ^ b.rotate_left(1) ^ b.rotate_left(2) ^ b.rotate_left(3) ^ b.rotate_left(4) ^ 0x63;
    }
    s
}

fn inv_sbox(s: &[u8; 256]) -> [u8; 256] {
    let mut inv = [0u8; 256];
    for (x, &y) in s.iter().enumerate() {
        inv[y as usize] = x as u8;
    }
    inv
}

pub struct Aes128 {
    round_keys: [[u8; 16]; 11],
    sbox: [u8; 256],
    inv: [u8; 256],
}

impl Aes128 {
    pub fn new(key: &[u8; 16]) -> Self {
        let sbox = sbox();
        let mut w = [[0u8; 4]; 44];
        for i in 0..4 {
            w[i].copy_from_slice(&key[4 * i..4 * i + 4]);
        }
        let mut rcon = 1u8;
        for i in 4..44 {
            let mut t = w[i - 1];
            if i % 4 == 0 {
                t = [t[1], t[2], t[3], t[0]];
                for b in t.iter_mut() {
                    *b = sbox[*b as usize];
                }
                t[0] ^= rcon;
                rcon = xtime(rcon);
            }
            for j in 0..4 {
                w[i][j] = w[i - 4][j] ^ t[j];
            }
        }
        let mut round_keys = [[0u8; 16]; 11];
        for (r, rk) in round_keys.iter_mut().enumerate() {
            for c in 0..4 {
                rk[4 * c..4 * c + 4].copy_from_slice(&w[4 * r + c]);
            }
        }
        Aes128 {
            round_keys,
            inv: inv_sbox(&sbox),
            sbox,
        }
    }

    pub fn encrypt_block(&self, block: &mut [u8; 16]) {
        add(block, &self.round_keys[0]);
        for round in 1..=10 {
            for b in block.iter_mut() {
                *b = self.sbox[*b as usize];
            }
            shift_rows(block);
            if round != 10 {
                mix_columns(block, [2, 3, 1, 1]);
            }
            add(block, &self.round_keys[round]);
        }
    }

    pub fn decrypt_block(&self, block: &mut [u8; 16]) {
        add(block, &self.round_keys[10]);
        for round in (0..10).rev() {
            inv_shift_rows(block);
            for b in block.iter_mut() {
                *b = self.inv[*b as usize];
            }
            add(block, &self.round_keys[round]);
            if round != 0 {
                mix_columns(block, [14, 11, 13, 9]);
            }
        }
    }
}

fn add(block: &mut [u8; 16], key: &[u8; 16]) {
    for (b, k) in block.iter_mut().zip(key) {
        *b ^= k;
    }
}

// State byte (row r, column c) lives at index r + 4c.
fn shift_rows(s: &mut [u8; 16]) {
    let old = *s;
    for r in 0..4 {
        for c in 0..4 {
            s[r + 4 * c] = old[r + 4 * ((c + r) % 4)];
        }
    }
}

fn inv_shift_rows(s: &mut [u8; 16]) {
    let old = *s;
    for r in 0..4 {
        for c in 0..4 {
            s[r + 4 * ((c + r) % 4)] = old[r + 4 * c];
        }
    }
}

fn mix_columns(s: &mut [u8; 16], m: [u8; 4]) {
    for c in 0..4 {
        let col = [s[4 * c], s[4 * c + 1], s[4 * c + 2], s[4 * c + 3]];
        for r in 0..4 {
            s[4 * c + r] = (0..4).fold(0, |acc, i| acc ^ gmul(m[(4 + i - r) % 4], col[i]));
        }
    }
}

fn passphrase_key(passphrase: &str) -> [u8; 16] {
    let digest = crate::sha256::sha256(passphrase.as_bytes());
    let mut key = [0u8; 16];
    key.copy_from_slice(&digest[..16]);
    key
}

/// ECB with PKCS#7, keyed by the first half of SHA-256(passphrase).
pub fn ecb_encrypt(plaintext: &[u8], passphrase: &str) -> Vec<u8> {
    let aes = Aes128::new(&passphrase_key(passphrase));
    let pad = 16 - plaintext.len() % 16;
    let mut data = plaintext.to_vec();
    data.resize(plaintext.len() + pad, pad as u8);
    for chunk in data.chunks_mut(16) {
        let block: &mut [u8; 16] = chunk.try_into().unwrap();
        aes.encrypt_block(block);
    }
    data
}

pub fn ecb_decrypt(ciphertext: &[u8], passphrase: &str) -> Option<Vec<u8>> {
    if ciphertext.is_empty() || !ciphertext.len().is_multiple_of(16) {
        return None;
    }
    let aes = Aes128::new(&passphrase_key(passphrase));
    let mut data = ciphertext.to_vec();
    for chunk in data.chunks_mut(16) {
        let block: &mut [u8; 16] = chunk.try_into().unwrap();
        aes.decrypt_block(block);
    }
    let pad = *data.last()? as usize;
    if pad == 0 || pad > 16 || data[data.len() - pad..].iter().any(|&b| b as usize != pad) {
        return None;
    }
    data.truncate(data.len() - pad);
    Some(data)
}
