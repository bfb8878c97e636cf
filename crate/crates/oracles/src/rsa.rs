use num_bigint::BigUint;

/// Left-to-right square-and-multiply.
pub fn modexp(base: &BigUint, exp: &BigUint, modulus: &BigUint) -> BigUint {
    let mut acc = BigUint::from(1u32) % modulus;
    for i in (0..exp.bits()).rev() {
        acc = &acc * &acc % modulus;
        if exp.bit(i) {
            acc = acc * base % modulus;
        }
    }
    acc
}

/// Repeated multiplication; only for tiny exponents.
pub fn modexp_naive(base: u64, exp: u64, modulus: u64) -> u64 {
    let mut acc = 1 % modulus;
    for _ in 0..exp {
        acc = acc * base % modulus;
    }
    acc
}

/// Framed textbook RSA over a byte stream: the stream starts with a kind
/// byte (1 text, 2 hex), is cut into pieces of at most `min(k - 2, 255)`
/// bytes, each piece is prefixed by its length, raised to `exp`, and
/// written as a big-endian block of exactly `k` bytes.
pub fn frame_encrypt(kind: u8, payload: &[u8], n: &BigUint, exp: &BigUint) -> Vec<u8> {
    let k = n.bits().div_ceil(8) as usize;
    let piece = (k - 2).min(255);
    let mut stream = vec![kind];
    stream.extend_from_slice(payload);
    let mut out = Vec::new();
    for part in stream.chunks(piece) {
        let mut m = vec![part.len() as u8];
        m.extend_from_slice(part);
        let c = modexp(&BigUint::from_bytes_be(&m), exp, n).to_bytes_be();
        out.resize(out.len() + k - c.len(), 0);
        out.extend_from_slice(&c);
    }
    out
}
