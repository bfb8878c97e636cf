#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Encrypt,
    Decrypt,
}

/// Rotates ASCII letters within their case; everything else passes through.
/// Any shift is accepted and reduced mod 26.
pub fn caesar_shift(text: &str, shift: i64, direction: Direction) -> String {
    let forward = shift.rem_euclid(26) as u8;
    let shift = match direction {
        Direction::Encrypt => forward,
        Direction::Decrypt => (26 - forward) % 26,
    };
    text.chars()
        .map(|c| match c {
            'A'..='Z' => rotate(c, b'A', shift),
            'a'..='z' => rotate(c, b'a', shift),
            _ => c,
        })
        .collect()
}

fn rotate(c: char, base: u8, shift: u8) -> char {
    (base + (c as u8 - base + shift) % 26) as char
}
