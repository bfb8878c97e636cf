const UPPER: &str = "ABCDEFGHIJKLMNOPQRSTUVWXYZ";
const LOWER: &str = "abcdefghijklmnopqrstuvwxyz";

/// Shifts letters forward by `shift` places (negative shifts go back).
pub fn shift(text: &str, shift: i64) -> String {
    text.chars()
        .map(|c| {
            for alphabet in [UPPER, LOWER] {
                if let Some(i) = alphabet.find(c) {
                    let j = (i as i64 + shift % 26 + 26) % 26;
                    return alphabet.as_bytes()[j as usize] as char;
                }
            }
            c
        })
        .collect()
}

/// Every (shift, decryption) pair whose decryption contains `fragment`.
pub fn brute_force(ciphertext: &str, fragment: &str) -> Vec<(i64, String)> {
    (0..26)
        .map(|k| (k, shift(ciphertext, -k)))
        .filter(|(_, p)| p.contains(fragment))
        .collect()
}
