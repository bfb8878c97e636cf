fn primes(n: usize) -> Vec<u128> {
    let mut out = Vec::new();
    let mut c = 2u128;
    while out.len() < n {
        if (2..c).take_while(|d| d * d <= c).all(|d| !c.is_multiple_of(d)) {
            out.push(c);
        }
        c += 1;
    }
    out
}

fn int_root(x: u128, k: u32) -> u128 {
    let (mut lo, mut hi) = (0u128, 1u128 << (128 / k + 1));
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        match mid.checked_pow(k) {
            Some(p) if p <= x => lo = mid,
            _ => hi = mid - 1,
        }
    }
    lo
}

/// First 32 fractional bits of the cube roots of the first 64 primes.
fn round_constants() -> Vec<u32> {
    primes(64)
        .into_iter()
        .map(|p| int_root(p << 96, 3) as u32)
        .collect()
}

/// First 32 fractional bits of the square roots of the first 8 primes.
fn initial_state() -> [u32; 8] {
    let mut h = [0u32; 8];
    for (slot, p) in h.iter_mut().zip(primes(8)) {
        *slot = int_root(p << 64, 2) as u32;
    }
    h
}

pub fn sha256(message: &[u8]) -> [u8; 32] {
    let k = round_constants();
    let mut h = initial_state();

    let mut data = message.to_vec();
    let bit_len = (message.len() as u64).wrapping_mul(8);
    data.push(0x80);
    while data.len() % 64 != 56 {
        data.push(0);
    }
    data.extend_from_slice(&bit_len.to_be_bytes());

    for block in data.chunks(64) {
        let mut w = [0u32; 64];
        for t in 0..16 {
            w[t] = u32::from_be_bytes([
                block[4 * t],
                block[4 * t + 1],
                block[4 * t + 2],
                block[4 * t + 3],
            ]);
        }
        for t in 16..64 {
            let s0 = w[t - 15].rotate_right(7) ^ w[t - 15].rotate_right(18) ^ (w[t - 15] >> 3);
            let s1 = w[t - 2].rotate_right(17) ^ w[t - 2].rotate_right(19) ^ (w[t - 2] >> 10);
            w[t] = w[t - 16]
                .wrapping_add(s0)
                .wrapping_add(w[t - 7])
                .wrapping_add(s1);
        }
        let [mut a, mut b, mut c, mut d, mut e, mut f, mut g, mut hh] = h;
        for t in 0..64 {
            let big_s1 = e.rotate_right(6) ^ e.rotate_right(11) ^ e.rotate_right(25);
            let ch = (e & f) ^ (!e & g);
            let t1 = hh
                .wrapping_add(big_s1)
                .wrapping_add(ch)
                .wrapping_add(k[t])
                .wrapping_add(w[t]);
            let big_s0 = a.rotate_right(2) ^ a.rotate_right(13) ^ a.rotate_right(22);
            let maj = (a & b) ^ (a & c) ^ (b & c);
            let t2 = big_s0.wrapping_add(maj);
            hh = g;
            g = f;
            f = e;
            e = d.wrapping_add(t1);
            d = c;
            c = b;
            b = a;
            a = t1.wrapping_add(t2);
        }
        for (slot, v) in h.iter_mut().zip([a, b, c, d, e, f, g, hh]) {
            *slot = slot.wrapping_add(v);
        }
    }

    let mut out = [0u8; 32];
    for (i, word) in h.iter().enumerate() {
        out[4 * i..4 * i + 4].copy_from_slice(&word.to_be_bytes());
    }
    out
}

pub fn sha256_hex(message: &[u8]) -> String {
    crate::to_hex(&sha256(message))
}
