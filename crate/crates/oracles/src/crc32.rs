/// CRC-32 (reflected polynomial 0xEDB88320), one bit at a time.
pub fn crc32(data: &[u8]) -> u32 {
    let mut crc = !0u32;
    for &b in data {
        crc ^= b as u32;
        for _ in 0..8 {
            crc = if crc & 1 == 1 {
                (crc >> 1) ^ 0xEDB8_8320
            } else {
                crc >> 1
            };
        }
    }
    !crc
}

pub fn crc32_hex(data: &[u8]) -> String {
    crate::to_hex(&crc32(data).to_be_bytes())
}

/// Finds a 4-byte suffix making `prefix ++ suffix` hit `target`, by running
/// the register update backwards from the target state.
pub fn forge_suffix(prefix: &[u8], target: u32) -> [u8; 4] {
    let mut table = [0u32; 256];
    for (i, slot) in table.iter_mut().enumerate() {
        let mut c = i as u32;
        for _ in 0..8 {
            c = if c & 1 == 1 { (c >> 1) ^ 0xEDB8_8320 } else { c >> 1 };
        }
        *slot = c;
    }
    let mut state = !target;
    let mut suffix_indices = [0u8; 4];
    for slot in suffix_indices.iter_mut().rev() {
        let idx = (0..256)
            .find(|&i| table[i] >> 24 == state >> 24)
            .expect("top bytes of table are distinct");
        *slot = idx as u8;
        state = ((state ^ table[idx]) << 8) | idx as u32;
    }
    let mut reg = !crc32(prefix);
    let mut suffix = [0u8; 4];
    for (out, idx) in suffix.iter_mut().zip(suffix_indices) {
        let b = (reg as u8) ^ idx;
        *out = b;
        reg = (reg >> 8) ^ table[(reg as u8 ^ b) as usize];
    }
    suffix
}
